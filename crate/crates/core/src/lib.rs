//! Numerical laboratory for the quasilinear Dirichlet problem
//!
//! ```text
//! div(g(|∇u|²) ∇u) = f(u) G(|∇u|²)  in Ω,    u = 0  on ∂Ω,
//! ```
//!
//! with `G(s) = g(s) + 2 s g'(s)`, on smooth strictly convex planar domains
//! (finite differences) and on balls in any dimension (shooting).
//!
//! The crate checks three properties of the solution numerically: concavity
//! of the transform `v(u) = ∫_u^0 dy/√F(y)`, the boundary minimum principle
//! for the P-function `|∇u|² + β F(u)`, and the curvature-based lower bound
//! on `−u_min` together with the inradius upper bound.

pub mod error;
pub mod fields;
pub mod geometry;
pub mod problem;
mod quadrature;
pub mod radial;
pub mod solver2d;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{make_grid, ClippedGrid, ConvexDomain};
pub use problem::{ProblemSpec, Verdict};
