//! Radially symmetric solutions on the ball `B_R ⊂ R^n`.
//!
//! The profile `φ(r)` solves `G φ'' + (n−1) g φ'/r = f(φ) G` with
//! `φ'(0) = φ(R) = 0`. We integrate the initial value problem with classical
//! RK4 from the centre and shoot on `φ(0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ProblemSpec;

pub const DEFAULT_STEPS: usize = 2000;
pub const MIN_STEPS: usize = 200;
const EXPANSION: f64 = 1.5;
const MAX_BRACKET_STEPS: usize = 80;
const MAX_SHRINKS: usize = 40;
const MAX_REFINE: usize = 200;

/// `φ''` from the radial equation. At `r = 0` the singular term is replaced
/// by its limit, giving `φ''(0) = f G(0) / ((n−1) g(0) + G(0))`.
pub fn ode_rhs(spec: &ProblemSpec, n: usize, r: f64, phi: f64, phi_prime: f64) -> Result<f64> {
    let s = phi_prime * phi_prime;
    let d = spec.diffusivity(s).map_err(|_| Error::Spacelike {
        s,
        s_limit: spec.s_limit,
        location: format!("r = {r}"),
    })?;
    let f = spec.f.value(phi);
    if r == 0.0 {
        Ok(f * d.big_g / ((n - 1) as f64 * d.g + d.big_g))
    } else {
        Ok(f - (n - 1) as f64 * (d.g / d.big_g) * phi_prime / r)
    }
}

/// Profile `φ, φ', φ''` on a uniform radial grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSolution {
    pub radius: f64,
    pub n: usize,
    pub h_r: f64,
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_prime: Vec<f64>,
    pub phi_second: Vec<f64>,
    pub phi0: f64,
}

impl RadialSolution {
    /// Minimum of the profile, attained at the centre.
    pub fn u_min(&self) -> f64 {
        self.phi.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `φ(R)`, the shooting residual.
    pub fn boundary_value(&self) -> f64 {
        *self.phi.last().expect("non-empty profile")
    }

    /// `|∇u|` on the sphere, i.e. `φ'(R)`.
    pub fn boundary_slope(&self) -> f64 {
        *self.phi_prime.last().expect("non-empty profile")
    }

    pub fn max_slope_sq(&self) -> f64 {
        self.phi_prime.iter().map(|p| p * p).fold(0.0, f64::max)
    }

    /// CSV `r,phi,phi_prime,phi_second`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,phi,phi_prime,phi_second\n");
        for k in 0..self.r.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.r[k], self.phi[k], self.phi_prime[k], self.phi_second[k]
            ));
        }
        out
    }
}

/// RK4 integration of `(φ, φ')` from the centre with `φ(0) = phi0`,
/// `φ'(0) = 0`.
pub fn integrate(
    spec: &ProblemSpec,
    n: usize,
    phi0: f64,
    radius: f64,
    h_r: f64,
) -> Result<RadialSolution> {
    if n < 2 {
        return Err(Error::DomainViolation {
            what: "n",
            value: n as f64,
            range: "n >= 2".into(),
        });
    }
    if !(phi0 < 0.0) {
        return Err(Error::DomainViolation {
            what: "phi0",
            value: phi0,
            range: "(-inf, 0)".into(),
        });
    }
    if !(radius > 0.0) {
        return Err(Error::DomainViolation {
            what: "R",
            value: radius,
            range: "(0, inf)".into(),
        });
    }
    if !(h_r > 0.0) || h_r > radius / MIN_STEPS as f64 * (1.0 + 1e-12) {
        return Err(Error::DomainViolation {
            what: "h_r",
            value: h_r,
            range: format!("(0, R/{MIN_STEPS}]"),
        });
    }
    let steps = (radius / h_r).round() as usize;
    let h = radius / steps as f64;
    let rhs =
        |r: f64, y: [f64; 2]| -> Result<[f64; 2]> { Ok([y[1], ode_rhs(spec, n, r, y[0], y[1])?]) };

    let mut sol = RadialSolution {
        radius,
        n,
        h_r: h,
        r: Vec::with_capacity(steps + 1),
        phi: Vec::with_capacity(steps + 1),
        phi_prime: Vec::with_capacity(steps + 1),
        phi_second: Vec::with_capacity(steps + 1),
        phi0,
    };
    let mut y = [phi0, 0.0];
    for k in 0..=steps {
        let r = k as f64 * h;
        let acc = ode_rhs(spec, n, r, y[0], y[1])?;
        sol.r.push(r);
        sol.phi.push(y[0]);
        sol.phi_prime.push(y[1]);
        sol.phi_second.push(acc);
        if k == steps {
            break;
        }
        let k1 = [y[1], acc];
        let k2 = rhs(
            r + 0.5 * h,
            [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]],
        )?;
        let k3 = rhs(
            r + 0.5 * h,
            [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]],
        )?;
        let k4 = rhs(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]])?;
        for c in 0..2 {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
    }
    Ok(sol)
}

#[derive(Debug, Clone, Copy)]
pub struct ShootOptions {
    /// Required `|φ(R)|`.
    pub tol: f64,
    /// Radial step; `None` means `R / 2000`.
    pub h_r: Option<f64>,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            h_r: None,
        }
    }
}

/// One trial integration made while searching for a bracket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotAttempt {
    pub phi0: f64,
    pub boundary_value: Option<f64>,
    pub spacelike_failure_r: Option<f64>,
}

/// No `phi0` yields an admissible profile reaching `φ(R) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExistenceFailure {
    pub radius: f64,
    pub n: usize,
    pub reason: String,
    pub attempts: Vec<ShotAttempt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShootOutcome {
    Converged(RadialSolution),
    ExistenceFailure(ExistenceFailure),
}

impl ShootOutcome {
    pub fn solution(&self) -> Option<&RadialSolution> {
        match self {
            ShootOutcome::Converged(s) => Some(s),
            ShootOutcome::ExistenceFailure(_) => None,
        }
    }

    pub fn into_solution(self) -> Option<RadialSolution> {
        match self {
            ShootOutcome::Converged(s) => Some(s),
            ShootOutcome::ExistenceFailure(_) => None,
        }
    }
}

fn spacelike_r(e: &Error) -> Option<f64> {
    match e {
        Error::Spacelike { location, .. } => location.strip_prefix("r = ")?.parse().ok(),
        _ => None,
    }
}

/// Shoots on `φ(0)` until `|φ(R)| ≤ tol`.
///
/// `φ(R; φ0)` increases with `φ0`; the bracket starts from the Poisson
/// guess `−R² f(0) / (2n)` and expands by a factor 1.5. Spacelike failures
/// while expanding pull the trial point back towards the last admissible
/// one; if no admissible sign change is found the result is an
/// [`ExistenceFailure`].
pub fn shoot(
    spec: &ProblemSpec,
    n: usize,
    radius: f64,
    opts: ShootOptions,
) -> Result<ShootOutcome> {
    let h_r = opts.h_r.unwrap_or(radius / DEFAULT_STEPS as f64);
    let mut attempts = Vec::new();
    let mut eval = |phi0: f64| -> Result<std::result::Result<RadialSolution, f64>> {
        match integrate(spec, n, phi0, radius, h_r) {
            Ok(sol) => {
                attempts.push(ShotAttempt {
                    phi0,
                    boundary_value: Some(sol.boundary_value()),
                    spacelike_failure_r: None,
                });
                Ok(Ok(sol))
            }
            Err(e @ Error::Spacelike { .. }) => {
                let r = spacelike_r(&e).unwrap_or(f64::NAN);
                attempts.push(ShotAttempt {
                    phi0,
                    boundary_value: None,
                    spacelike_failure_r: Some(r),
                });
                Ok(Err(r))
            }
            Err(e) => Err(e),
        }
    };

    let guess = -radius * radius * spec.f.value(0.0) / (2 * n) as f64;
    // Find an admissible starting point, moving towards zero on failure.
    let mut start = None;
    let mut trial = guess;
    for _ in 0..MAX_SHRINKS {
        if let Ok(sol) = eval(trial)? {
            start = Some(sol);
            break;
        }
        trial /= EXPANSION;
    }
    let Some(start) = start else {
        return Ok(existence_failure(
            radius,
            n,
            "no admissible trial profile",
            attempts,
        ));
    };
    if start.boundary_value().abs() <= opts.tol {
        return Ok(ShootOutcome::Converged(start));
    }

    let (mut lo, mut hi) = if start.boundary_value() > 0.0 {
        // need a more negative centre value
        let mut hi = start;
        let mut cand = hi.phi0 * EXPANSION;
        let mut lo = None;
        for _ in 0..MAX_BRACKET_STEPS {
            match eval(cand)? {
                Ok(sol) if sol.boundary_value() <= 0.0 => {
                    lo = Some(sol);
                    break;
                }
                Ok(sol) => {
                    if sol.boundary_value() >= hi.boundary_value() {
                        return Err(Error::NonMonotoneShooting(format!(
                            "phi(R) did not decrease from phi0 = {} to {}",
                            hi.phi0, sol.phi0
                        )));
                    }
                    cand = sol.phi0 * EXPANSION;
                    hi = sol;
                }
                // spacelike failure: shrink towards the admissible end
                Err(_) => cand = 0.5 * (cand + hi.phi0),
            }
        }
        match lo {
            Some(lo) => (lo, hi),
            None => {
                return Ok(existence_failure(
                    radius,
                    n,
                    "no sign change of phi(R) within the admissible range",
                    attempts,
                ))
            }
        }
    } else {
        let lo = start;
        let mut cand = lo.phi0;
        let mut hi = None;
        for _ in 0..MAX_BRACKET_STEPS {
            cand /= EXPANSION;
            match eval(cand)? {
                Ok(sol) if sol.boundary_value() >= 0.0 => {
                    hi = Some(sol);
                    break;
                }
                _ => {}
            }
        }
        match hi {
            Some(hi) => (lo, hi),
            None => {
                return Ok(existence_failure(
                    radius,
                    n,
                    "no sign change of phi(R) near phi0 = 0",
                    attempts,
                ))
            }
        }
    };

    // Illinois regula falsi on the bracket [lo, hi].
    let mut side = 0i8;
    let (mut f_lo, mut f_hi) = (lo.boundary_value(), hi.boundary_value());
    for _ in 0..MAX_REFINE {
        let width = hi.phi0 - lo.phi0;
        let mut cand = hi.phi0 - f_hi * width / (f_hi - f_lo);
        if !(cand > lo.phi0 && cand < hi.phi0) {
            cand = 0.5 * (lo.phi0 + hi.phi0);
        }
        let sol = match eval(cand)? {
            Ok(sol) => sol,
            Err(_) => {
                return Ok(existence_failure(
                    radius,
                    n,
                    "spacelike failure inside the shooting bracket",
                    attempts,
                ))
            }
        };
        let v = sol.boundary_value();
        if v < lo.boundary_value() || v > hi.boundary_value() {
            return Err(Error::NonMonotoneShooting(format!(
                "phi(R; {cand}) = {v} outside [{}, {}]",
                lo.boundary_value(),
                hi.boundary_value()
            )));
        }
        if v.abs() <= opts.tol {
            return Ok(ShootOutcome::Converged(sol));
        }
        if width <= 4.0 * f64::EPSILON * lo.phi0.abs() {
            let best = if v.abs() < f_lo.abs().min(f_hi.abs()) {
                sol
            } else if f_lo.abs() < f_hi.abs() {
                lo
            } else {
                hi
            };
            return Ok(ShootOutcome::Converged(best));
        }
        if v < 0.0 {
            lo = sol;
            f_lo = v;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = sol;
            f_hi = v;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    let best = if f_lo.abs() < f_hi.abs() { lo } else { hi };
    Ok(ShootOutcome::Converged(best))
}

fn existence_failure(
    radius: f64,
    n: usize,
    reason: &str,
    attempts: Vec<ShotAttempt>,
) -> ShootOutcome {
    ShootOutcome::ExistenceFailure(ExistenceFailure {
        radius,
        n,
        reason: reason.to_string(),
        attempts,
    })
}

/// Convexity of the radial profile: `φ'' > 0` and the second derivative of
/// `w(r) = ∫_0^φ dy/√F(y)` (the negated concavity transform) is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialConvexityReport {
    pub min_phi_second: f64,
    pub min_transform_second: f64,
    pub phi_second_origin: f64,
    pub phi_second_origin_closed_form: f64,
    pub origin_discrepancy: f64,
    pub pass: bool,
}

pub fn radial_convexity_check(
    sol: &RadialSolution,
    spec: &ProblemSpec,
) -> Result<RadialConvexityReport> {
    let last = sol.r.len() - 1;
    let min_phi_second = sol.phi_second[..last]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let mut min_w = f64::INFINITY;
    for k in 0..last {
        let phi = sol.phi[k];
        if phi >= 0.0 {
            continue;
        }
        let big_f = spec.cumulative_f(phi)?;
        let f = spec.f.value(phi);
        let p1 = sol.phi_prime[k];
        let w2 = (sol.phi_second[k] * big_f + f * p1 * p1) / (2.0 * big_f * big_f.sqrt());
        min_w = min_w.min(w2);
    }
    let d0 = spec.diffusivity(0.0)?;
    let closed = spec.f.value(sol.phi[0]) * d0.big_g / ((sol.n - 1) as f64 * d0.g + d0.big_g);
    let discrepancy = (sol.phi_second[0] - closed).abs();
    Ok(RadialConvexityReport {
        min_phi_second,
        min_transform_second: min_w,
        phi_second_origin: sol.phi_second[0],
        phi_second_origin_closed_form: closed,
        origin_discrepancy: discrepancy,
        pass: min_phi_second > 0.0 && min_w > 0.0 && discrepancy <= 1e-8,
    })
}
