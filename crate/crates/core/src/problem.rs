//! The coefficient pair `(g, f)` of `div(g(|∇u|²)∇u) = f(u) G(|∇u|²)` and the
//! scalar quantities derived from it.
//!
//! `G(s) = g(s) + 2 s g'(s)`, `F(u) = ∫_u^0 f`, and the concavity transform
//! `v(u) = ∫_u^0 dy / √F(y)` all live here, together with the sampled checks
//! of the structural hypotheses on `f` and `g`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Evaluations closer than this relative margin to `s_limit` are clamped.
pub const S_LIMIT_CLAMP: f64 = 1e-9;

const F_REL_TOL: f64 = 1e-12;
const V_REL_TOL: f64 = 1e-10;
const DEFAULT_SAMPLES: usize = 512;

/// User-supplied coefficient with hand-written derivatives.
pub struct CustomCoefficient {
    pub name: String,
    pub value: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub first: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub second: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

/// A scalar coefficient function together with its first two derivatives.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    /// `Σ c_k x^k`
    Polynomial(Vec<f64>),
    /// `offset + scale · exp(rate · x)`
    Exponential {
        offset: f64,
        scale: f64,
        rate: f64,
    },
    /// `(shift + slope · x)^exponent`
    Power {
        shift: f64,
        slope: f64,
        exponent: f64,
    },
    Custom(Arc<CustomCoefficient>),
}

impl Coefficient {
    pub fn custom(
        name: &str,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        first: impl Fn(f64) -> f64 + Send + Sync + 'static,
        second: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Coefficient::Custom(Arc::new(CustomCoefficient {
            name: name.to_string(),
            value: Box::new(value),
            first: Box::new(first),
            second: Box::new(second),
        }))
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck),
            Coefficient::Exponential {
                offset,
                scale,
                rate,
            } => offset + scale * (rate * x).exp(),
            Coefficient::Power {
                shift,
                slope,
                exponent,
            } => (shift + slope * x).powf(*exponent),
            Coefficient::Custom(c) => (c.value)(x),
        }
    }

    pub fn first(&self, x: f64) -> f64 {
        match self {
            Coefficient::Constant(_) => 0.0,
            Coefficient::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &ck)| acc * x + k as f64 * ck),
            Coefficient::Exponential { scale, rate, .. } => scale * rate * (rate * x).exp(),
            Coefficient::Power {
                shift,
                slope,
                exponent,
            } => exponent * slope * (shift + slope * x).powf(exponent - 1.0),
            Coefficient::Custom(c) => (c.first)(x),
        }
    }

    pub fn second(&self, x: f64) -> f64 {
        match self {
            Coefficient::Constant(_) => 0.0,
            Coefficient::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |acc, (k, &ck)| acc * x + (k * (k - 1)) as f64 * ck),
            Coefficient::Exponential { scale, rate, .. } => scale * rate * rate * (rate * x).exp(),
            Coefficient::Power {
                shift,
                slope,
                exponent,
            } => {
                exponent
                    * (exponent - 1.0)
                    * slope
                    * slope
                    * (shift + slope * x).powf(exponent - 2.0)
            }
            Coefficient::Custom(c) => (c.second)(x),
        }
    }

    /// `Some(c)` when the coefficient is identically the constant `c`.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Coefficient::Constant(c) => Some(*c),
            Coefficient::Polynomial(c) if c.iter().skip(1).all(|&x| x == 0.0) => {
                Some(c.first().copied().unwrap_or(0.0))
            }
            Coefficient::Exponential {
                offset,
                scale,
                rate,
            } if *scale == 0.0 || *rate == 0.0 => Some(offset + scale),
            _ => None,
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join(v: &[f64]) -> String {
            v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
        }
        match self {
            Coefficient::Constant(c) => write!(f, "const:{c}"),
            Coefficient::Polynomial(c) => write!(f, "poly:{}", join(c)),
            Coefficient::Exponential {
                offset,
                scale,
                rate,
            } => write!(f, "exp:{}", join(&[*offset, *scale, *rate])),
            Coefficient::Power {
                shift,
                slope,
                exponent,
            } => write!(f, "pow:{}", join(&[*shift, *slope, *exponent])),
            Coefficient::Custom(c) => write!(f, "custom:{}", c.name),
        }
    }
}

impl FromStr for Coefficient {
    type Err = Error;

    /// Parses `const:c`, `poly:c0,c1,..`, `exp:offset,scale,rate`,
    /// `pow:shift,slope,exponent`, or the builtin diffusivities `euclidean`
    /// (`(1+s)^{-1/2}`) and `lorentzian` (`(1-s)^{-1/2}`).
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::Descriptor {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let s_trim = s.trim();
        match s_trim {
            "euclidean" => return Ok(euclidean_g()),
            "lorentzian" => return Ok(lorentzian_g()),
            _ => {}
        }
        let (kind, args) = s_trim
            .split_once(':')
            .ok_or_else(|| bad("expected `kind:args`"))?;
        let nums = args
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| bad(&e.to_string()))?;
        let exact = |n: usize| -> Result<()> {
            if nums.len() == n {
                Ok(())
            } else {
                Err(bad(&format!("`{kind}` takes {n} numbers")))
            }
        };
        match kind {
            "const" => {
                exact(1)?;
                Ok(Coefficient::Constant(nums[0]))
            }
            "poly" => Ok(Coefficient::Polynomial(nums)),
            "exp" => {
                exact(3)?;
                Ok(Coefficient::Exponential {
                    offset: nums[0],
                    scale: nums[1],
                    rate: nums[2],
                })
            }
            "pow" => {
                exact(3)?;
                Ok(Coefficient::Power {
                    shift: nums[0],
                    slope: nums[1],
                    exponent: nums[2],
                })
            }
            _ => Err(bad("unknown coefficient kind")),
        }
    }
}

fn euclidean_g() -> Coefficient {
    Coefficient::Power {
        shift: 1.0,
        slope: 1.0,
        exponent: -0.5,
    }
}

fn lorentzian_g() -> Coefficient {
    Coefficient::Power {
        shift: 1.0,
        slope: -1.0,
        exponent: -0.5,
    }
}

/// Which of the two model equations (if any) a spec is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Euclidean,
    Lorentzian,
}

/// Serializable description of a [`ProblemSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(default = "default_dimension")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_limit: Option<f64>,
}

fn default_dimension() -> usize {
    2
}

/// Coefficients of the quasilinear problem, immutable after construction.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub g: Coefficient,
    pub f: Coefficient,
    /// Upper bound on admissible `|∇u|²` (infinite when unconstrained).
    pub s_limit: f64,
    pub n: usize,
}

/// `g`, `g'` and `G` evaluated at one value of `s = |∇u|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diffusivity {
    pub g: f64,
    pub g_prime: f64,
    pub big_g: f64,
    pub clamped: bool,
}

impl ProblemSpec {
    /// `g(s) = (1+s)^{-1/2}`, `f ≡ 1`.
    pub fn euclidean(n: usize) -> Self {
        Self {
            name: "euclidean".into(),
            g: euclidean_g(),
            f: Coefficient::Constant(1.0),
            s_limit: f64::INFINITY,
            n,
        }
    }

    /// `g(s) = (1-s)^{-1/2}`, `f ≡ 1`, spacelike constraint `s < 1`.
    pub fn lorentzian(n: usize) -> Self {
        Self {
            name: "lorentzian".into(),
            g: lorentzian_g(),
            f: Coefficient::Constant(1.0),
            s_limit: 1.0,
            n,
        }
    }

    /// `g ≡ 1`, `f ≡ 1`: the linear problem `Δu = 1`.
    pub fn poisson(n: usize) -> Self {
        Self {
            name: "poisson".into(),
            g: Coefficient::Constant(1.0),
            f: Coefficient::Constant(1.0),
            s_limit: f64::INFINITY,
            n,
        }
    }

    /// Builds a custom spec and checks positivity of `g`, `f` and `G` on the
    /// default sample sets.
    pub fn new(name: &str, g: Coefficient, f: Coefficient, s_limit: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::DomainViolation {
                what: "n",
                value: n as f64,
                range: "n >= 2".into(),
            });
        }
        if !(s_limit > 0.0) {
            return Err(Error::DomainViolation {
                what: "s_limit",
                value: s_limit,
                range: "(0, inf]".into(),
            });
        }
        let spec = Self {
            name: name.to_string(),
            g,
            f,
            s_limit,
            n,
        };
        for &s in &default_s_samples(s_limit) {
            let d = spec.diffusivity(s)?;
            if !(d.g > 0.0) || !(d.big_g > 0.0) {
                return Err(Error::DomainViolation {
                    what: "s (g or G not positive)",
                    value: s,
                    range: "g > 0 and G > 0".into(),
                });
            }
        }
        for &u in &default_u_samples(-10.0) {
            if !(spec.f.value(u) > 0.0) {
                return Err(Error::DomainViolation {
                    what: "u (f not positive)",
                    value: u,
                    range: "f > 0".into(),
                });
            }
        }
        Ok(spec)
    }

    pub fn from_config(cfg: &ProblemConfig) -> Result<Self> {
        let builtin = match cfg.name.as_str() {
            "euclidean" => Some(Self::euclidean(cfg.n)),
            "lorentzian" => Some(Self::lorentzian(cfg.n)),
            "poisson" => Some(Self::poisson(cfg.n)),
            _ => None,
        };
        if let Some(spec) = builtin {
            if cfg.g.is_none() && cfg.f.is_none() && cfg.s_limit.is_none() {
                if cfg.n < 2 {
                    return Err(Error::DomainViolation {
                        what: "n",
                        value: cfg.n as f64,
                        range: "n >= 2".into(),
                    });
                }
                return Ok(spec);
            }
        }
        let missing = |which: &str| Error::Descriptor {
            input: cfg.name.clone(),
            reason: format!("custom problem needs a `{which}` descriptor"),
        };
        let g: Coefficient = cfg.g.as_deref().ok_or_else(|| missing("g"))?.parse()?;
        let f: Coefficient = cfg.f.as_deref().ok_or_else(|| missing("f"))?.parse()?;
        let s_limit = cfg.s_limit.unwrap_or_else(|| implied_s_limit(&g));
        Self::new(&cfg.name, g, f, s_limit, cfg.n)
    }

    pub fn to_config(&self) -> ProblemConfig {
        let builtin = matches!(self.name.as_str(), "euclidean" | "lorentzian" | "poisson")
            && Self::from_config(&ProblemConfig {
                name: self.name.clone(),
                g: None,
                f: None,
                n: self.n,
                s_limit: None,
            })
            .map(|b| b.g.to_string() == self.g.to_string() && b.f.to_string() == self.f.to_string())
            .unwrap_or(false);
        if builtin {
            ProblemConfig {
                name: self.name.clone(),
                g: None,
                f: None,
                n: self.n,
                s_limit: None,
            }
        } else {
            ProblemConfig {
                name: self.name.clone(),
                g: Some(self.g.to_string()),
                f: Some(self.f.to_string()),
                n: self.n,
                s_limit: self.s_limit.is_finite().then_some(self.s_limit),
            }
        }
    }

    /// The model equation this spec coincides with, if any (`f ≡ 1` and the
    /// matching diffusivity).
    pub fn model_kind(&self) -> Option<ModelKind> {
        if self.f.as_constant() != Some(1.0) {
            return None;
        }
        match &self.g {
            Coefficient::Power {
                shift,
                slope,
                exponent,
            } if *shift == 1.0 && *exponent == -0.5 => {
                if *slope == 1.0 {
                    Some(ModelKind::Euclidean)
                } else if *slope == -1.0 {
                    Some(ModelKind::Lorentzian)
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// Maps `s` into the admissible range, clamping values within the
    /// relative margin of `s_limit`.
    pub fn admissible_s(&self, s: f64) -> Result<(f64, bool)> {
        if !(s >= 0.0) || s >= self.s_limit {
            return Err(Error::DomainViolation {
                what: "s",
                value: s,
                range: format!("[0, {})", self.s_limit),
            });
        }
        let cap = self.s_limit * (1.0 - S_LIMIT_CLAMP);
        if s > cap {
            Ok((cap, true))
        } else {
            Ok((s, false))
        }
    }

    pub fn diffusivity(&self, s: f64) -> Result<Diffusivity> {
        let (s, clamped) = self.admissible_s(s)?;
        let g = self.g.value(s);
        let g_prime = self.g.first(s);
        Ok(Diffusivity {
            g,
            g_prime,
            big_g: g + 2.0 * s * g_prime,
            clamped,
        })
    }

    /// `G(s) = g(s) + 2 s g'(s)`.
    pub fn big_g(&self, s: f64) -> Result<f64> {
        self.diffusivity(s).map(|d| d.big_g)
    }

    /// `G'(s) = 3 g'(s) + 2 s g''(s)`.
    pub fn big_g_prime(&self, s: f64) -> Result<f64> {
        let (s, _) = self.admissible_s(s)?;
        Ok(3.0 * self.g.first(s) + 2.0 * s * self.g.second(s))
    }

    /// `F(u) = ∫_u^0 f(y) dy` for `u ≤ 0`.
    pub fn cumulative_f(&self, u: f64) -> Result<f64> {
        check_nonpositive(u)?;
        Ok(self.cumulative_f_unchecked(u))
    }

    fn cumulative_f_unchecked(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        match self.f.as_constant() {
            Some(c) => -c * u,
            None => quadrature::integrate(|y| self.f.value(y), u, 0.0, F_REL_TOL, 0.0),
        }
    }

    /// `v(u) = ∫_u^0 dy / √F(y)`, evaluated after the substitution `y = -t²`
    /// which removes the inverse square-root singularity at `y = 0`.
    pub fn v_of_u(&self, u: f64) -> Result<f64> {
        check_nonpositive(u)?;
        if u == 0.0 {
            return Ok(0.0);
        }
        if let Some(c) = self.f.as_constant() {
            return Ok(2.0 * (-u / c).sqrt());
        }
        let t_max = (-u).sqrt();
        Ok(quadrature::integrate(
            |t| {
                let big_f = self.cumulative_f_unchecked(-t * t);
                2.0 * t / big_f.sqrt()
            },
            0.0,
            t_max,
            V_REL_TOL,
            0.0,
        ))
    }

    /// Samples `f' > 0` and `2 f'² − f f'' ≥ 0` (the concavity hypothesis).
    pub fn check_concavity_hypothesis(&self, u_samples: &[f64]) -> ConcavityHypothesis {
        let mut min_f_prime = f64::INFINITY;
        let mut max_abs_f_prime: f64 = 0.0;
        let mut min_convexity = f64::INFINITY;
        let mut worst_u = None;
        for &u in u_samples {
            let fp = self.f.first(u);
            let q = 2.0 * fp * fp - self.f.value(u) * self.f.second(u);
            if fp < min_f_prime {
                min_f_prime = fp;
            }
            max_abs_f_prime = max_abs_f_prime.max(fp.abs());
            if q < min_convexity {
                min_convexity = q;
            }
            if (fp < 0.0 || q < 0.0) && worst_u.is_none() {
                worst_u = Some(u);
            }
        }
        let verdict = if min_f_prime > 0.0 && min_convexity >= 0.0 {
            Verdict::Pass
        } else if max_abs_f_prime <= MARGINAL_ZERO && min_convexity >= -MARGINAL_ZERO {
            Verdict::Marginal
        } else {
            Verdict::Fail
        };
        ConcavityHypothesis {
            min_f_prime,
            min_convexity_term: min_convexity,
            verdict,
            first_failing_u: worst_u,
        }
    }

    /// Samples `g f' G + β g f² G' ≤ 0` over the product grid of `u` and `s`
    /// samples (the minimum-principle hypothesis).
    pub fn check_minimum_principle_hypothesis(
        &self,
        beta: f64,
        u_samples: &[f64],
        s_samples: &[f64],
    ) -> MinimumPrincipleHypothesis {
        let mut max_expr = f64::NEG_INFINITY;
        let mut max_abs: f64 = 0.0;
        let mut at = (0.0, 0.0);
        let mut clamped = false;
        for &s in s_samples {
            let Ok(d) = self.diffusivity(s) else { continue };
            let Ok(gp) = self.big_g_prime(s) else {
                continue;
            };
            clamped |= d.clamped;
            for &u in u_samples {
                let f = self.f.value(u);
                let expr = d.g * self.f.first(u) * d.big_g + beta * d.g * f * f * gp;
                max_abs = max_abs.max(expr.abs());
                if expr > max_expr {
                    max_expr = expr;
                    at = (u, s);
                }
            }
        }
        let verdict = if max_abs <= MARGINAL_ZERO {
            Verdict::Marginal
        } else if max_expr <= 0.0 {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        MinimumPrincipleHypothesis {
            beta,
            max_expression: max_expr,
            argmax_u: at.0,
            argmax_s: at.1,
            verdict,
            clamped,
        }
    }
}

/// Values this small count as identically zero in hypothesis verdicts.
const MARGINAL_ZERO: f64 = 1e-14;

fn check_nonpositive(u: f64) -> Result<()> {
    if u > 0.0 || u.is_nan() {
        Err(Error::DomainViolation {
            what: "u",
            value: u,
            range: "(-inf, 0]".into(),
        })
    } else {
        Ok(())
    }
}

fn implied_s_limit(g: &Coefficient) -> f64 {
    match g {
        Coefficient::Power { shift, slope, .. } if *slope < 0.0 => shift / -slope,
        _ => f64::INFINITY,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    /// The inequality holds only in the degenerate, identically-zero sense.
    Marginal,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityHypothesis {
    pub min_f_prime: f64,
    pub min_convexity_term: f64,
    pub verdict: Verdict,
    pub first_failing_u: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimumPrincipleHypothesis {
    pub beta: f64,
    pub max_expression: f64,
    pub argmax_u: f64,
    pub argmax_s: f64,
    pub verdict: Verdict,
    pub clamped: bool,
}

/// Uniform samples of `[u_lo, 0]`.
pub fn default_u_samples(u_lo: f64) -> Vec<f64> {
    (0..DEFAULT_SAMPLES)
        .map(|k| u_lo * (1.0 - k as f64 / (DEFAULT_SAMPLES - 1) as f64))
        .collect()
}

/// Samples of `[0, s_limit)` clustered geometrically near both ends; for an
/// infinite limit the samples run geometrically up to `1e4`.
pub fn default_s_samples(s_limit: f64) -> Vec<f64> {
    let half = DEFAULT_SAMPLES / 2;
    let mut out = Vec::with_capacity(DEFAULT_SAMPLES);
    out.push(0.0);
    if s_limit.is_finite() {
        for k in 0..half {
            let e = -12.0 + 12.0 * k as f64 / (half - 1) as f64;
            out.push(0.5 * s_limit * 10f64.powf(e));
        }
        for k in 0..half - 1 {
            let e = -0.3 - 8.7 * k as f64 / (half - 2) as f64;
            out.push(s_limit * (1.0 - 10f64.powf(e)));
        }
    } else {
        for k in 0..DEFAULT_SAMPLES - 1 {
            let e = -12.0 + 16.0 * k as f64 / (DEFAULT_SAMPLES - 2) as f64;
            out.push(10f64.powf(e));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_spec() -> ProblemSpec {
        ProblemSpec::new(
            "exp",
            Coefficient::Constant(1.0),
            "exp:0,1,1".parse().unwrap(),
            f64::INFINITY,
            2,
        )
        .unwrap()
    }

    #[test]
    fn big_g_examples() {
        assert_eq!(ProblemSpec::euclidean(2).big_g(0.0).unwrap(), 1.0);
        assert!((ProblemSpec::euclidean(2).big_g(3.0).unwrap() - 0.125).abs() < 1e-15);
        assert!((ProblemSpec::lorentzian(2).big_g(0.75).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn big_g_rejects_inadmissible() {
        assert!(matches!(
            ProblemSpec::lorentzian(2).big_g(1.0),
            Err(Error::DomainViolation { .. })
        ));
        let d = ProblemSpec::lorentzian(2).diffusivity(1.0 - 1e-12).unwrap();
        assert!(d.clamped);
    }

    #[test]
    fn cumulative_f_examples() {
        let p = ProblemSpec::poisson(2);
        assert_eq!(p.cumulative_f(-2.0).unwrap(), 2.0);
        assert_eq!(p.cumulative_f(0.0).unwrap(), 0.0);
        assert_eq!(exp_spec().cumulative_f(0.0).unwrap(), 0.0);
        let e = exp_spec().cumulative_f(-1.0).unwrap();
        assert!((e - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert!(p.cumulative_f(0.1).is_err());
    }

    #[test]
    fn v_of_u_examples() {
        let p = ProblemSpec::poisson(2);
        assert!((p.v_of_u(-1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((p.v_of_u(-4.0).unwrap() - 4.0).abs() < 1e-15);
        assert_eq!(p.v_of_u(0.0).unwrap(), 0.0);
        assert!(p.v_of_u(1e-3).is_err());
    }

    #[test]
    fn v_of_u_exponential_matches_composite_simpson() {
        // Independent rule: composite Simpson on the t-substituted integrand
        // with the closed-form F(y) = 1 - e^y.
        let n = 20_000;
        let t_max = 1.0f64;
        let integrand = |t: f64| {
            if t == 0.0 {
                2.0
            } else {
                2.0 * t / (1.0 - (-t * t).exp()).sqrt()
            }
        };
        let step = t_max / n as f64;
        let mut acc = integrand(0.0) + integrand(t_max);
        for k in 1..n {
            acc += integrand(k as f64 * step) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let simpson = acc * step / 3.0;
        let v = exp_spec().v_of_u(-1.0).unwrap();
        assert!((v - simpson).abs() < 1e-8, "{v} vs {simpson}");
    }

    #[test]
    fn concavity_hypothesis_verdicts() {
        let samples = default_u_samples(-3.0);
        let constant = ProblemSpec::poisson(2).check_concavity_hypothesis(&samples);
        assert_eq!(constant.verdict, Verdict::Marginal);
        assert_eq!(constant.min_convexity_term, 0.0);

        let exp = exp_spec().check_concavity_hypothesis(&samples);
        assert_eq!(exp.verdict, Verdict::Pass);
        assert!((exp.min_convexity_term - (-6.0f64).exp()).abs() < 1e-15);

        let sine = ProblemSpec::new(
            "sine",
            Coefficient::Constant(1.0),
            Coefficient::custom("2+sin", |u| 2.0 + u.sin(), f64::cos, |u| -u.sin()),
            f64::INFINITY,
            2,
        )
        .unwrap();
        let rep = sine.check_concavity_hypothesis(&[-3.0, -1.0, 0.0]);
        assert_eq!(rep.verdict, Verdict::Fail);
        assert_eq!(rep.first_failing_u, Some(-3.0));
        assert!((rep.min_f_prime - (-3.0f64).cos()).abs() < 1e-15);
    }

    #[test]
    fn minimum_principle_hypothesis_verdicts() {
        let us = default_u_samples(-1.0);
        let e = ProblemSpec::euclidean(2);
        let rep = e.check_minimum_principle_hypothesis(1.5, &us, &default_s_samples(e.s_limit));
        assert_eq!(rep.verdict, Verdict::Pass);

        let l = ProblemSpec::lorentzian(2);
        let rep = l.check_minimum_principle_hypothesis(1.5, &us, &default_s_samples(l.s_limit));
        assert_eq!(rep.verdict, Verdict::Fail);
        assert!(rep.clamped || rep.argmax_s < 1.0);

        let p = ProblemSpec::poisson(2);
        let rep = p.check_minimum_principle_hypothesis(1.7, &us, &default_s_samples(p.s_limit));
        assert_eq!(rep.verdict, Verdict::Marginal);
    }

    #[test]
    fn descriptors_round_trip() {
        for d in ["const:1", "poly:1,0,2.5", "exp:0,1,1", "pow:1,-1,-0.5"] {
            let c: Coefficient = d.parse().unwrap();
            assert_eq!(c.to_string(), d);
        }
        assert!("exp:1,2".parse::<Coefficient>().is_err());
        assert!("spline:1".parse::<Coefficient>().is_err());
    }

    #[test]
    fn config_builtins_and_custom() {
        let cfg = ProblemConfig {
            name: "lorentzian".into(),
            g: None,
            f: None,
            n: 3,
            s_limit: None,
        };
        let spec = ProblemSpec::from_config(&cfg).unwrap();
        assert_eq!(spec.s_limit, 1.0);
        assert_eq!(spec.model_kind(), Some(ModelKind::Lorentzian));
        assert_eq!(spec.to_config(), cfg);

        let custom = ProblemConfig {
            name: "mine".into(),
            g: Some("lorentzian".into()),
            f: Some("exp:0,1,1".into()),
            n: 2,
            s_limit: None,
        };
        let spec = ProblemSpec::from_config(&custom).unwrap();
        assert_eq!(spec.s_limit, 1.0);
        assert_eq!(spec.model_kind(), None);
        let back = ProblemSpec::from_config(&spec.to_config()).unwrap();
        assert_eq!(back.g.to_string(), spec.g.to_string());
    }

    #[test]
    fn polynomial_derivatives() {
        let c = Coefficient::Polynomial(vec![1.0, 2.0, 3.0, 4.0]);
        let x = 0.7;
        assert!((c.value(x) - (1.0 + 2.0 * x + 3.0 * x * x + 4.0 * x * x * x)).abs() < 1e-14);
        assert!((c.first(x) - (2.0 + 6.0 * x + 12.0 * x * x)).abs() < 1e-14);
        assert!((c.second(x) - (6.0 + 24.0 * x)).abs() < 1e-14);
    }
}
