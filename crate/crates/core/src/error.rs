use thiserror::Error;

/// Errors raised by the problem, geometry and solver layers.
///
/// Solver non-convergence and existence failures are not errors; they are
/// reported through dedicated outcome types (`ShootOutcome`, `SolveFailure`).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {what} = {value} outside admissible range {range}")]
    DomainViolation {
        what: &'static str,
        value: f64,
        range: String,
    },

    #[error("spacelike constraint violated: |grad u|^2 = {s} >= {s_limit} at {location}")]
    Spacelike {
        s: f64,
        s_limit: f64,
        location: String,
    },

    #[error("domain is not strictly convex: curvature {curvature} at t = {t}")]
    NotStrictlyConvex { t: f64, curvature: f64 },

    #[error("grid spacing h = {h} too coarse: {reason}")]
    GridTooCoarse { h: f64, reason: String },

    #[error("alpha = {alpha} outside validity region (0, {limit}]")]
    ValidityRegion { alpha: f64, limit: f64 },

    #[error("invalid descriptor `{input}`: {reason}")]
    Descriptor { input: String, reason: String },

    #[error("shooting lost monotonicity: {0}")]
    NonMonotoneShooting(String),

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
