//! Closed-form bounds and the checks that compare them, and the structural
//! properties of the solution, against computed fields.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    derive, p_function, ps_inequality_residual, v_equation_residual_where, v_field, DerivedFields,
    CORE_DEPTH, CRITICAL_S,
};
use crate::geometry::{make_grid, ConvexDomain};
use crate::problem::{
    default_s_samples, default_u_samples, ConcavityHypothesis, MinimumPrincipleHypothesis,
    ModelKind, ProblemConfig, ProblemSpec,
};
use crate::radial::{shoot, RadialSolution, ShootOptions, ShootOutcome};
use crate::solver2d::{newton_solve, Field2D, NewtonOptions, SolveFailure, SolveOutcome};

/// Upper end `2/(3√3)` of the range of `q − q³` on `(0, 1)`.
pub fn lorentz_alpha_max() -> f64 {
    2.0 / (3.0 * 3f64.sqrt())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainViolation {
            what: "alpha",
            value: alpha,
            range: "(0, inf)".into(),
        })
    }
}

/// Real root of `q³ + q − α = 0` by Cardano's formula.
///
/// With `A³ + B³ = α` and `AB = −1/3` the sum `A + B` is evaluated as
/// `α / (A² + 1/3 + B²)`, which avoids the cancellation of the two cube
/// roots for small `α`.
pub fn euclid_root(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let a = (0.5 * alpha + (0.25 * alpha * alpha + 1.0 / 27.0).sqrt()).cbrt();
    let b = -1.0 / (3.0 * a);
    Ok(alpha / (a * a + 1.0 / 3.0 + b * b))
}

/// Smallest positive root of `q³ − q + α = 0` by the trigonometric form,
/// for `0 < α ≤ 2/(3√3)`.
pub fn lorentz_root(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let limit = lorentz_alpha_max();
    if alpha > limit * (1.0 + 4.0 * f64::EPSILON) {
        return Err(Error::ValidityRegion { alpha, limit });
    }
    let arg = (-1.5 * 3f64.sqrt() * alpha).max(-1.0);
    let q = 2.0 / 3f64.sqrt() * (arg.acos() / 3.0 - 2.0 * PI / 3.0).cos();
    // one Newton step away from the double root restores relative accuracy
    // for small alpha, where the cosine is evaluated near pi/2
    let slope = 3.0 * q * q - 1.0;
    if slope.abs() > 0.1 {
        Ok(q - (q * q * q - q + alpha) / slope)
    } else {
        Ok(q)
    }
}

/// Lower bound `q²` on `−u_min` for the Euclidean model.
pub fn lower_bound_euclid(alpha: f64) -> Result<f64> {
    euclid_root(alpha).map(|q| q * q)
}

/// Lower bound `q²` on `−u_min` for the Lorentzian model.
pub fn lower_bound_lorentz(alpha: f64) -> Result<f64> {
    lorentz_root(alpha).map(|q| q * q)
}

/// Tolerances applied by the checks; each report section stores the value
/// it used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative slack for the bound comparisons.
    pub bound_relative: f64,
    /// Minimum-principle slack, relative to `max(1, q_m²)`.
    pub minimum_principle: f64,
    /// Gradient-ceiling slack, relative to `max(1, −2u_min)`.
    pub gradient_ceiling: f64,
    /// Inequality slack, relative to `max(1, (Δu)²|∇u|²)`.
    pub inequality: f64,
    /// Relative spread below which `Φ` counts as constant.
    pub constancy: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            bound_relative: 1e-3,
            minimum_principle: 1e-4,
            gradient_ceiling: 1e-4,
            inequality: 1e-6,
            constancy: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankProfile {
    /// Core nodes with both eigenvalues below the threshold.
    pub full_rank: usize,
    pub other: usize,
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavitySection {
    /// `"checked"` or `"degenerate field"`.
    pub status: String,
    pub max_core_eigenvalue: Option<f64>,
    pub location: Option<[f64; 2]>,
    /// `−h²`.
    pub threshold: f64,
    pub pass: Option<bool>,
    pub rank_profile: Option<RankProfile>,
    pub hypothesis: ConcavityHypothesis,
}

/// Concavity of `v`: the largest Hessian eigenvalue over the core must be
/// below `−h²`.
pub fn concavity_check(spec: &ProblemSpec, derived: &DerivedFields) -> Result<ConcavitySection> {
    let h = derived.grid.h;
    let threshold = -h * h;
    let hypothesis = spec.check_concavity_hypothesis(&default_u_samples(derived.u_min.min(-1e-12)));
    if derived.values.iter().all(|&u| u == 0.0) {
        return Ok(ConcavitySection {
            status: "degenerate field".into(),
            max_core_eigenvalue: None,
            location: None,
            threshold,
            pass: None,
            rank_profile: None,
            hypothesis,
        });
    }
    let v = v_field(spec, derived)?;
    let (max_eig, at) = v.max_core_eigenvalue().expect("derived fields have a core");
    let full_rank = v
        .eigenvalues
        .iter()
        .flatten()
        .filter(|(lo, hi)| *lo < threshold && *hi < threshold)
        .count();
    let total = v.eigenvalues.iter().flatten().count();
    let node = &derived.grid.nodes[at];
    Ok(ConcavitySection {
        status: "checked".into(),
        max_core_eigenvalue: Some(max_eig),
        location: Some([node.x, node.y]),
        threshold,
        pass: Some(max_eig < threshold),
        rank_profile: Some(RankProfile {
            full_rank,
            other: total - full_rank,
            constant: full_rank == 0 || full_rank == total,
        }),
        hypothesis,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaRegime {
    /// `1 < β < 2`.
    Open,
    /// `β = 1` or `β = 2`, reached by continuity.
    Endpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimumPrincipleSection {
    pub beta: f64,
    pub regime: BetaRegime,
    pub interior_min: f64,
    pub interior_min_location: [f64; 2],
    pub boundary_min: f64,
    pub boundary_min_location: [f64; 2],
    /// `interior_min − boundary_min`.
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub interior_range: f64,
    pub non_constant: bool,
    /// Whether the overall minimum of `Φ` lies on the boundary.
    pub minimum_on_boundary: bool,
    pub hypothesis: MinimumPrincipleHypothesis,
}

/// Boundary minimum principle for `Φ(·; β)`.
pub fn minimum_principle_check(
    spec: &ProblemSpec,
    derived: &DerivedFields,
    beta: f64,
    tol: &Tolerances,
) -> Result<MinimumPrincipleSection> {
    if !(1.0..=2.0).contains(&beta) {
        return Err(Error::DomainViolation {
            what: "beta",
            value: beta,
            range: "[1, 2]".into(),
        });
    }
    let phi = p_function(spec, derived, beta)?;
    let (interior_min, i_at) = phi.interior_min();
    let (boundary_min, b_at) = phi.boundary_min();
    let scale = derived.q_m.powi(2).max(1.0);
    let tolerance = tol.minimum_principle * scale;
    let interior_range = phi.interior_range();
    let node = &derived.grid.nodes[i_at];
    let hypothesis = spec.check_minimum_principle_hypothesis(
        beta,
        &default_u_samples(derived.u_min.min(-1e-12)),
        &default_s_samples(spec.s_limit),
    );
    Ok(MinimumPrincipleSection {
        beta,
        regime: if beta > 1.0 && beta < 2.0 {
            BetaRegime::Open
        } else {
            BetaRegime::Endpoint
        },
        interior_min,
        interior_min_location: [node.x, node.y],
        boundary_min,
        boundary_min_location: derived.boundary[b_at].point,
        margin: interior_min - boundary_min,
        tolerance,
        pass: interior_min >= boundary_min - tolerance,
        interior_range,
        non_constant: interior_range > tol.constancy * scale,
        minimum_on_boundary: boundary_min <= interior_min,
        hypothesis,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundSection {
    pub model: ModelKind,
    pub alpha: f64,
    pub bound: Option<f64>,
    pub root: Option<f64>,
    pub neg_u_min: f64,
    /// `"field"` or `"radial"`.
    pub source: String,
    pub relative_slack: f64,
    pub pass: Option<bool>,
    /// Set when `α` lies outside the range of the closed form.
    pub validity_error: Option<String>,
}

/// Compares `−u_min` with the curvature lower bound of the matching model.
pub fn lower_bound_check(
    spec: &ProblemSpec,
    domain: &ConvexDomain,
    neg_u_min: f64,
    source: &str,
    tol: &Tolerances,
) -> Result<LowerBoundSection> {
    let model = spec.model_kind().ok_or_else(|| {
        Error::Unsupported(format!(
            "the curvature lower bound needs the euclidean or lorentzian model with f = 1, got `{}`",
            spec.name
        ))
    })?;
    let alpha = domain.alpha(spec.n)?;
    let root = match model {
        ModelKind::Euclidean => euclid_root(alpha),
        ModelKind::Lorentzian => lorentz_root(alpha),
    };
    let mut section = LowerBoundSection {
        model,
        alpha,
        bound: None,
        root: None,
        neg_u_min,
        source: source.into(),
        relative_slack: tol.bound_relative,
        pass: None,
        validity_error: None,
    };
    match root {
        Ok(q) => {
            let bound = q * q;
            section.root = Some(q);
            section.bound = Some(bound);
            section.pass = Some(neg_u_min >= bound * (1.0 - tol.bound_relative));
        }
        Err(e @ Error::ValidityRegion { .. }) => {
            section.validity_error = Some(format!(
                "{e}; domain {domain} has k_max = {}, alpha = {alpha}",
                domain.k_max()
            ));
        }
        Err(e) => return Err(e),
    }
    Ok(section)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundSection {
    pub inradius: f64,
    /// `d²/2`.
    pub ceiling: f64,
    pub neg_u_min: f64,
    pub relative_slack: f64,
    pub pass: bool,
}

/// `−u_min ≤ d²/2` with `d` the inradius.
pub fn upper_bound_check(
    domain: &ConvexDomain,
    neg_u_min: f64,
    tol: &Tolerances,
) -> UpperBoundSection {
    let d = domain.inradius();
    let ceiling = 0.5 * d * d;
    UpperBoundSection {
        inradius: d,
        ceiling,
        neg_u_min,
        relative_slack: tol.bound_relative,
        pass: neg_u_min <= ceiling * (1.0 + tol.bound_relative),
    }
}

/// `|∇u|² + F(u) ≥ q_m²` at every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientFloorSection {
    pub q_m: f64,
    /// Minimum over nodes of `Φ(·; 1) − q_m²`.
    pub min_excess: f64,
    pub location: [f64; 2],
    pub tolerance: f64,
    pub pass: bool,
}

pub fn gradient_floor_check(
    spec: &ProblemSpec,
    derived: &DerivedFields,
    tol: &Tolerances,
) -> Result<GradientFloorSection> {
    let phi = p_function(spec, derived, 1.0)?;
    let (min_phi, at) = phi.interior_min();
    let q2 = derived.q_m * derived.q_m;
    let tolerance = tol.minimum_principle * q2.max(1.0);
    let node = &derived.grid.nodes[at];
    Ok(GradientFloorSection {
        q_m: derived.q_m,
        min_excess: min_phi - q2,
        location: [node.x, node.y],
        tolerance,
        pass: min_phi - q2 >= -tolerance,
    })
}

/// `|∇u|² ≤ 2u − 2u_min` at every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCeilingSection {
    /// Minimum over nodes of `2u − 2u_min − |∇u|²`.
    pub min_slack: f64,
    pub location: [f64; 2],
    /// `max(1, −2u_min)`.
    pub scale: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn gradient_ceiling_check(derived: &DerivedFields, tol: &Tolerances) -> GradientCeilingSection {
    let (min_slack, at) = derived
        .values
        .iter()
        .zip(&derived.s_field)
        .enumerate()
        .map(|(k, (&u, &s))| (2.0 * u - 2.0 * derived.u_min - s, k))
        .fold(
            (f64::INFINITY, 0),
            |acc, x| if x.0 < acc.0 { x } else { acc },
        );
    let scale = (-2.0 * derived.u_min).max(1.0);
    let tolerance = tol.gradient_ceiling * scale;
    let node = &derived.grid.nodes[at];
    GradientCeilingSection {
        min_slack,
        location: [node.x, node.y],
        scale,
        tolerance,
        pass: min_slack >= -tolerance,
    }
}

/// Residual of the boundary relation obtained from the equation when
/// `u = 0` on the boundary:
/// `(g (u_nn + κ u_n) + 2 g' u_n² u_nn) / G − f(0) = 0` with coefficients at
/// `s = u_n²`. For the Euclidean model this is
/// `u_nn + κ u_n (1 + u_n²) = 1`, for the Lorentzian one
/// `u_nn + κ u_n (1 − u_n²) = 1`.
pub fn boundary_identity_residuals(
    spec: &ProblemSpec,
    derived: &DerivedFields,
) -> Result<Vec<f64>> {
    let f0 = spec.f.value(0.0);
    derived
        .boundary
        .iter()
        .map(|b| {
            let s = b.u_n * b.u_n;
            let d = spec.diffusivity(s)?;
            Ok(
                (d.g * (b.u_nn + b.curvature * b.u_n) + 2.0 * d.g_prime * s * b.u_nn) / d.big_g
                    - f0,
            )
        })
        .collect()
}

fn max_abs(xs: &[f64]) -> (f64, usize) {
    xs.iter().enumerate().fold(
        (0.0, 0),
        |acc, (k, &x)| if x.abs() > acc.0 { (x.abs(), k) } else { acc },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryIdentitySection {
    pub max_residual: f64,
    pub max_residual_at: [f64; 2],
    /// Same quantity on the grid with twice the spacing.
    pub coarse_max_residual: Option<f64>,
    /// `coarse / fine`.
    pub ratio: Option<f64>,
    /// `log2(ratio)`.
    pub order_estimate: Option<f64>,
    /// Smallest ratio accepted as first-order decay.
    pub min_ratio: f64,
    pub order_pass: Option<bool>,
    /// `u_nn` at the boundary sample minimizing `u_n` (where `Φ` attains its
    /// boundary minimum).
    pub u_nn_at_boundary_min: f64,
    /// `1/2 + max_residual`.
    pub u_nn_ceiling: f64,
    pub u_nn_pass: bool,
}

/// Smallest error ratio under halving of `h` accepted as first order,
/// with the same relative allowance as the lower edge of
/// [`SECOND_ORDER_BAND`].
pub const FIRST_ORDER_MIN_RATIO: f64 = 2.0 * SECOND_ORDER_BAND[0] / 4.0;

pub fn boundary_identity_check(
    spec: &ProblemSpec,
    derived: &DerivedFields,
    coarse: Option<&DerivedFields>,
) -> Result<BoundaryIdentitySection> {
    let res = boundary_identity_residuals(spec, derived)?;
    let (max_residual, at) = max_abs(&res);
    let coarse_max = match coarse {
        Some(c) => Some(max_abs(&boundary_identity_residuals(spec, c)?).0),
        None => None,
    };
    let ratio = coarse_max.map(|c| c / max_residual);
    let u_nn = derived.boundary[derived.q_m_sample].u_nn;
    let ceiling = 0.5 + max_residual;
    Ok(BoundaryIdentitySection {
        max_residual,
        max_residual_at: derived.boundary[at].point,
        coarse_max_residual: coarse_max,
        ratio,
        order_estimate: ratio.map(f64::log2),
        min_ratio: FIRST_ORDER_MIN_RATIO,
        order_pass: ratio.map(|r| r >= FIRST_ORDER_MIN_RATIO),
        u_nn_at_boundary_min: u_nn,
        u_nn_ceiling: ceiling,
        u_nn_pass: u_nn <= ceiling,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VEquationSection {
    /// Over the core (distance `> 3h`).
    pub max_residual_core: f64,
    /// Depth of the fixed comparison region, `3 · 2h`.
    pub region_depth: f64,
    pub region_max_fine: Option<f64>,
    pub region_max_coarse: Option<f64>,
    /// `coarse / fine` over the fixed region.
    pub ratio: Option<f64>,
    pub ratio_band: [f64; 2],
    pub order_pass: Option<bool>,
}

/// Band accepted for an error ratio under halving of `h` at second order.
pub const SECOND_ORDER_BAND: [f64; 2] = [3.2, 4.8];

pub fn v_equation_check(
    spec: &ProblemSpec,
    derived: &DerivedFields,
    coarse: Option<&DerivedFields>,
) -> Result<VEquationSection> {
    let v = v_field(spec, derived)?;
    let core = v_equation_residual_where(spec, derived, &v, |k| derived.core_mask[k])?;
    let depth = CORE_DEPTH * 2.0 * derived.grid.h;
    let region = |d: &DerivedFields| -> Result<f64> {
        let v = v_field(spec, d)?;
        let dom = &d.grid.domain;
        let res = v_equation_residual_where(spec, d, &v, |k| {
            let n = &d.grid.nodes[k];
            dom.distance_to_boundary([n.x, n.y]) > depth
        })?;
        Ok(res.max_abs())
    };
    let (fine, coarse_max) = match coarse {
        Some(c) => (Some(region(derived)?), Some(region(c)?)),
        None => (None, None),
    };
    let ratio = match (fine, coarse_max) {
        (Some(f), Some(c)) => Some(c / f),
        _ => None,
    };
    Ok(VEquationSection {
        max_residual_core: core.max_abs(),
        region_depth: depth,
        region_max_fine: fine,
        region_max_coarse: coarse_max,
        ratio,
        ratio_band: SECOND_ORDER_BAND,
        order_pass: ratio.map(|r| (SECOND_ORDER_BAND[0]..=SECOND_ORDER_BAND[1]).contains(&r)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalitySection {
    pub min_scaled_residual: f64,
    pub nodes_checked: usize,
    pub critical_threshold: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn inequality_check(derived: &DerivedFields, tol: &Tolerances) -> InequalitySection {
    let res = ps_inequality_residual(derived);
    let min = res.min_scaled();
    InequalitySection {
        min_scaled_residual: if res.nodes.is_empty() { 0.0 } else { min },
        nodes_checked: res.nodes.len(),
        critical_threshold: CRITICAL_S,
        tolerance: tol.inequality,
        pass: res.nodes.is_empty() || min >= -tol.inequality,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub converged: bool,
    pub residual_norm: f64,
    pub lambda: f64,
    pub newton_steps: usize,
    pub max_slope_sq: f64,
    pub min_u_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub problem: ProblemConfig,
    pub domain: String,
    pub h: f64,
    pub nodes: usize,
    pub u_min: f64,
    pub u_min_location: [f64; 2],
    pub solver: SolverSummary,
    pub concavity: ConcavitySection,
    pub minimum_principle: Vec<MinimumPrincipleSection>,
    pub lower_bound: Option<LowerBoundSection>,
    pub upper_bound: UpperBoundSection,
    pub gradient_floor_check: GradientFloorSection,
    pub gradient_ceiling_check: GradientCeilingSection,
    pub boundary_identity: BoundaryIdentitySection,
    pub v_equation: VEquationSection,
    pub inequality: InequalitySection,
    pub tolerances: Tolerances,
    /// Conjunction of every evaluated pass flag.
    pub pass: bool,
}

impl VerificationReport {
    fn aggregate(&self) -> bool {
        let mut flags = vec![
            self.upper_bound.pass,
            self.gradient_floor_check.pass,
            self.gradient_ceiling_check.pass,
            self.boundary_identity.u_nn_pass,
            self.inequality.pass,
        ];
        flags.extend(self.concavity.pass);
        flags.extend(self.minimum_principle.iter().map(|m| m.pass));
        flags.extend(self.lower_bound.as_ref().and_then(|l| l.pass));
        flags.extend(self.boundary_identity.order_pass);
        flags.extend(self.v_equation.order_pass);
        flags.into_iter().all(|f| f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub betas: Vec<f64>,
    pub newton: NewtonOptions,
    /// Also solve on the grid with spacing `2h` for order estimates.
    pub order_study: bool,
    pub tolerances: Tolerances,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            betas: vec![1.0, 1.5, 2.0],
            newton: NewtonOptions::default(),
            order_study: true,
            tolerances: Tolerances::default(),
        }
    }
}

/// Runs every check on a converged field; `coarse` (spacing `2h`) enables
/// the order estimates.
pub fn verify_field(
    spec: &ProblemSpec,
    field: &Field2D,
    coarse: Option<&Field2D>,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    let tol = &opts.tolerances;
    let derived = derive(field)?;
    let coarse_derived = match coarse {
        Some(c) => Some(derive(c)?),
        None => None,
    };
    let domain = field.grid.domain;
    let neg_u_min = -derived.u_min;
    let minimum_principle = opts
        .betas
        .iter()
        .map(|&b| minimum_principle_check(spec, &derived, b, tol))
        .collect::<Result<Vec<_>>>()?;
    let lower_bound = match spec.model_kind() {
        Some(_) => Some(lower_bound_check(spec, &domain, neg_u_min, "field", tol)?),
        None => None,
    };
    let mut report = VerificationReport {
        problem: spec.to_config(),
        domain: domain.to_string(),
        h: field.grid.h,
        nodes: field.grid.len(),
        u_min: derived.u_min,
        u_min_location: derived.u_min_location(),
        solver: SolverSummary {
            converged: field.converged,
            residual_norm: field.residual_norm,
            lambda: field.lambda,
            newton_steps: field.log.iter().filter(|e| e.iter > 0).count(),
            max_slope_sq: derived.max_s(),
            min_u_n: derived.min_u_n(),
        },
        concavity: concavity_check(spec, &derived)?,
        minimum_principle,
        lower_bound,
        upper_bound: upper_bound_check(&domain, neg_u_min, tol),
        gradient_floor_check: gradient_floor_check(spec, &derived, tol)?,
        gradient_ceiling_check: gradient_ceiling_check(&derived, tol),
        boundary_identity: boundary_identity_check(spec, &derived, coarse_derived.as_ref())?,
        v_equation: v_equation_check(spec, &derived, coarse_derived.as_ref())?,
        inequality: inequality_check(&derived, tol),
        tolerances: *tol,
        pass: false,
    };
    report.pass = report.aggregate();
    Ok(report)
}

#[derive(Debug, Clone)]
pub enum VerifyOutcome {
    Report(Box<VerificationReport>),
    SolverFailure(SolveFailure),
}

/// Solves on `domain` with spacing `h` (and `2h` for order estimates when
/// that grid is admissible) and runs [`verify_field`].
pub fn verify(
    spec: &ProblemSpec,
    domain: &ConvexDomain,
    h: f64,
    opts: &VerifyOptions,
) -> Result<VerifyOutcome> {
    let grid = make_grid(domain, h)?;
    let field = match newton_solve(spec, &grid, &opts.newton)? {
        SolveOutcome::Converged(f) => f,
        SolveOutcome::Failed(f) => return Ok(VerifyOutcome::SolverFailure(f)),
    };
    let coarse = if opts.order_study {
        match make_grid(domain, 2.0 * h) {
            Ok(g) => match newton_solve(spec, &g, &opts.newton)? {
                SolveOutcome::Converged(f) => Some(f),
                SolveOutcome::Failed(f) => return Ok(VerifyOutcome::SolverFailure(f)),
            },
            Err(Error::GridTooCoarse { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    verify_field(spec, &field, coarse.as_ref(), opts).map(|r| VerifyOutcome::Report(Box::new(r)))
}

/// Bound checks against a radial profile on the ball of radius `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialBoundsReport {
    pub radius: f64,
    pub n: usize,
    pub neg_u_min: f64,
    pub max_slope: f64,
    pub lower_bound: Option<LowerBoundSection>,
    pub upper_bound: UpperBoundSection,
}

pub fn radial_bounds(
    spec: &ProblemSpec,
    sol: &RadialSolution,
    tol: &Tolerances,
) -> Result<RadialBoundsReport> {
    let disk = ConvexDomain::disk(sol.radius)?;
    let neg_u_min = -sol.u_min();
    // the inradius of a ball is its radius in every dimension, and
    // K_max = 1/R; `alpha` below uses the dimension of `spec`
    let lower_bound = match spec.model_kind() {
        Some(_) => Some(lower_bound_check(spec, &disk, neg_u_min, "radial", tol)?),
        None => None,
    };
    Ok(RadialBoundsReport {
        radius: sol.radius,
        n: sol.n,
        neg_u_min,
        max_slope: sol.max_slope_sq().sqrt(),
        lower_bound,
        upper_bound: upper_bound_check(&disk, neg_u_min, tol),
    })
}

/// One row of the bounds table; `None` values come with an error message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub alpha: f64,
    pub euclidean: Option<f64>,
    pub lorentzian: Option<f64>,
    pub lorentzian_error: Option<String>,
}

pub fn bounds_row(alpha: f64) -> Result<BoundsRow> {
    let euclidean = lower_bound_euclid(alpha)?;
    let (lorentzian, lorentzian_error) = match lower_bound_lorentz(alpha) {
        Ok(b) => (Some(b), None),
        Err(e @ Error::ValidityRegion { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    Ok(BoundsRow {
        alpha,
        euclidean: Some(euclidean),
        lorentzian,
        lorentzian_error,
    })
}

/// One ball radius in the Lorentzian validity map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityEntry {
    pub radius: f64,
    pub alpha: f64,
    pub bound: Option<f64>,
    pub bound_error: Option<String>,
    pub exists: bool,
    pub neg_u_min: Option<f64>,
    pub max_slope: Option<f64>,
    /// `−u_min ≥ bound·(1 − slack)`, when both exist.
    pub bound_holds: Option<bool>,
}

/// Where the closed-form bound stops being defined versus where the radial
/// problem stops having a spacelike solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityMap {
    pub n: usize,
    pub alpha_limit: f64,
    /// Ball radius at which `α` reaches `alpha_limit`.
    pub bound_radius_limit: f64,
    /// Bracket `[exists, fails]` on the largest radius with a solution.
    pub existence_bracket: [f64; 2],
    pub entries: Vec<ValidityEntry>,
}

fn lorentz_exists(spec: &ProblemSpec, n: usize, radius: f64) -> Result<Option<RadialSolution>> {
    Ok(match shoot(spec, n, radius, ShootOptions::default())? {
        ShootOutcome::Converged(s) => Some(s),
        ShootOutcome::ExistenceFailure(_) => None,
    })
}

/// Samples `radii` and bisects the existence boundary of the Lorentzian
/// radial problem between `bracket[0]` (must exist) and `bracket[1]` (must
/// fail) down to width `bracket_tol`.
pub fn lorentz_validity_map(
    n: usize,
    radii: &[f64],
    bracket: [f64; 2],
    bracket_tol: f64,
    tol: &Tolerances,
) -> Result<ValidityMap> {
    let spec = ProblemSpec::lorentzian(n);
    let alpha_limit = lorentz_alpha_max();
    let entries = radii
        .iter()
        .map(|&radius| {
            let alpha = radius / (2.0 * (n - 1) as f64);
            let (bound, bound_error) = match lower_bound_lorentz(alpha) {
                Ok(b) => (Some(b), None),
                Err(e @ Error::ValidityRegion { .. }) => (None, Some(e.to_string())),
                Err(e) => return Err(e),
            };
            let sol = lorentz_exists(&spec, n, radius)?;
            let neg_u_min = sol.as_ref().map(|s| -s.u_min());
            Ok(ValidityEntry {
                radius,
                alpha,
                bound,
                bound_error,
                exists: sol.is_some(),
                neg_u_min,
                max_slope: sol.as_ref().map(|s| s.max_slope_sq().sqrt()),
                bound_holds: match (bound, neg_u_min) {
                    (Some(b), Some(m)) => Some(m >= b * (1.0 - tol.bound_relative)),
                    _ => None,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let [mut lo, mut hi] = bracket;
    if lorentz_exists(&spec, n, lo)?.is_none() || lorentz_exists(&spec, n, hi)?.is_some() {
        return Err(Error::DomainViolation {
            what: "existence bracket",
            value: lo,
            range: format!("need a solution at {lo} and none at {hi}"),
        });
    }
    while hi - lo > bracket_tol {
        let mid = 0.5 * (lo + hi);
        if lorentz_exists(&spec, n, mid)?.is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ValidityMap {
        n,
        alpha_limit,
        bound_radius_limit: 2.0 * (n - 1) as f64 * alpha_limit,
        existence_bracket: [lo, hi],
        entries,
    })
}
