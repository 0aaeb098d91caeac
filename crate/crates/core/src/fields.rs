//! Derived quantities of a computed field: derivatives at nodes and on the
//! boundary, the P-function, the concavity transform `v` and the residuals
//! of the identities that tie them together.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Arm, BoundarySample, ClippedGrid, Dir};
use crate::problem::ProblemSpec;
use crate::solver2d::stencil::{gradients, hessians, Hessian};
use crate::solver2d::Field2D;

/// Nodes closer than this many spacings to the boundary are excluded from
/// Hessian-based checks.
pub const CORE_DEPTH: f64 = 3.0;

/// Gradients below this squared magnitude are treated as critical points.
pub const CRITICAL_S: f64 = 1e-10;

/// Normal derivatives at one boundary sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryDerivatives {
    pub t: f64,
    pub point: [f64; 2],
    pub normal: [f64; 2],
    pub curvature: f64,
    /// Outward normal derivative.
    pub u_n: f64,
    pub u_nn: f64,
}

#[derive(Debug, Clone)]
pub struct DerivedFields {
    pub grid: ClippedGrid,
    pub values: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
    pub hess: Vec<Hessian>,
    pub s_field: Vec<f64>,
    pub u_min: f64,
    pub u_min_node: usize,
    pub boundary: Vec<BoundaryDerivatives>,
    /// Smallest boundary `u_n` and the index of its sample.
    pub q_m: f64,
    pub q_m_sample: usize,
    pub core_mask: Vec<bool>,
}

impl DerivedFields {
    pub fn u_min_location(&self) -> [f64; 2] {
        let n = &self.grid.nodes[self.u_min_node];
        [n.x, n.y]
    }

    pub fn core_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.core_mask
            .iter()
            .enumerate()
            .filter_map(|(k, &c)| c.then_some(k))
    }

    pub fn max_s(&self) -> f64 {
        self.s_field.iter().fold(0.0, |m: f64, &s| m.max(s))
    }

    pub fn min_u_n(&self) -> f64 {
        self.boundary
            .iter()
            .fold(f64::INFINITY, |m, b| m.min(b.u_n))
    }
}

/// Nodal derivatives, boundary normal derivatives at the grid's boundary
/// samples and the core mask.
pub fn derive(field: &Field2D) -> Result<DerivedFields> {
    derive_with_samples(field, &field.grid.boundary)
}

/// [`derive`] with an explicit set of boundary samples.
pub fn derive_with_samples(field: &Field2D, samples: &[BoundarySample]) -> Result<DerivedFields> {
    let grid = &field.grid;
    let values = &field.values;
    let core_mask: Vec<bool> = grid
        .nodes
        .iter()
        .map(|n| grid.domain.distance_to_boundary([n.x, n.y]) > CORE_DEPTH * grid.h)
        .collect();
    if !core_mask.iter().any(|&c| c) {
        return Err(Error::GridTooCoarse {
            h: grid.h,
            reason: format!("no node lies deeper than {CORE_DEPTH} spacings"),
        });
    }
    let grad = gradients(grid, values, 0.0);
    let hess = hessians(grid, values, &grad, 0.0);
    let s_field = grad.iter().map(|g| g[0] * g[0] + g[1] * g[1]).collect();
    let (u_min, u_min_node) = field.u_min();
    let boundary = boundary_derivatives(grid, values, samples);
    let (q_m, q_m_sample) = boundary
        .iter()
        .enumerate()
        .fold((f64::INFINITY, 0), |acc, (k, b)| {
            if b.u_n < acc.0 {
                (b.u_n, k)
            } else {
                acc
            }
        });
    Ok(DerivedFields {
        grid: grid.clone(),
        values: values.clone(),
        grad,
        hess,
        s_field,
        u_min,
        u_min_node,
        boundary,
        q_m,
        q_m_sample,
        core_mask,
    })
}

/// `u_n` and `u_nn` from the cubic through `u = 0` on the boundary and the
/// interpolated values at depths `h`, `2h`, `3h` along the inward normal.
pub fn boundary_derivatives(
    grid: &ClippedGrid,
    values: &[f64],
    samples: &[BoundarySample],
) -> Vec<BoundaryDerivatives> {
    let interp = Interpolator::new(grid, values);
    let h = grid.h;
    samples
        .iter()
        .map(|b| {
            let at = |depth: f64| {
                interp.value([
                    b.point[0] - depth * b.normal[0],
                    b.point[1] - depth * b.normal[1],
                ])
            };
            let (u1, u2, u3) = (at(h), at(2.0 * h), at(3.0 * h));
            let inward_slope = (18.0 * u1 - 9.0 * u2 + 2.0 * u3) / (6.0 * h);
            BoundaryDerivatives {
                t: b.t,
                point: b.point,
                normal: b.normal,
                curvature: b.curvature,
                u_n: -inward_slope,
                u_nn: (-5.0 * u1 + 4.0 * u2 - u3) / (h * h),
            }
        })
        .collect()
}

/// Lagrange interpolation through up to four `(x, y)` pairs.
fn lagrange(pts: &[(f64, f64)], x: f64) -> f64 {
    let mut acc = 0.0;
    for (a, &(xa, ya)) in pts.iter().enumerate() {
        let mut w = 1.0;
        for (b, &(xb, _)) in pts.iter().enumerate() {
            if a != b {
                w *= (x - xb) / (xa - xb);
            }
        }
        acc += w * ya;
    }
    acc
}

/// Up to four consecutive points of the sorted `pts` around `x`.
fn window(pts: &[(f64, f64)], x: f64) -> &[(f64, f64)] {
    if pts.len() <= 4 {
        return pts;
    }
    let last_below = pts
        .iter()
        .take_while(|p| p.0 <= x)
        .count()
        .saturating_sub(1);
    let start = last_below.saturating_sub(1).min(pts.len() - 4);
    &pts[start..start + 4]
}

/// Drops interior points that nearly coincide with a boundary crossing.
fn merge_close(pts: &mut Vec<(f64, f64)>, tol: f64) {
    let n = pts.len();
    if n >= 3 && pts[1].0 - pts[0].0 < tol {
        pts.remove(1);
    }
    let n2 = pts.len();
    if n2 >= 3 && pts[n2 - 1].0 - pts[n2 - 2].0 < tol {
        pts.remove(n2 - 2);
    }
    debug_assert!(pts.len() + 2 >= n);
}

struct RowSpan {
    i_lo: i32,
    i_hi: i32,
    x_left: f64,
    x_right: f64,
}

/// Tensor-product cubic interpolation of nodal values extended by `u = 0`
/// on the boundary.
pub struct Interpolator<'a> {
    grid: &'a ClippedGrid,
    values: &'a [f64],
    rows: Vec<Option<RowSpan>>,
}

impl<'a> Interpolator<'a> {
    pub fn new(grid: &'a ClippedGrid, values: &'a [f64]) -> Self {
        let h = grid.h;
        let rows = (grid.j_bounds.0..=grid.j_bounds.1)
            .map(|j| {
                let mut span: Option<(i32, i32)> = None;
                for i in grid.i_bounds.0..=grid.i_bounds.1 {
                    if grid.index(i, j).is_some() {
                        span = Some(match span {
                            None => (i, i),
                            Some((lo, _)) => (lo, i),
                        });
                    }
                }
                span.map(|(i_lo, i_hi)| {
                    let lo = &grid.nodes[grid.index(i_lo, j).expect("row start")];
                    let hi = &grid.nodes[grid.index(i_hi, j).expect("row end")];
                    RowSpan {
                        i_lo,
                        i_hi,
                        x_left: lo.x - lo.arm(Dir::West).theta() * h,
                        x_right: hi.x + hi.arm(Dir::East).theta() * h,
                    }
                })
            })
            .collect();
        Self { grid, values, rows }
    }

    fn row(&self, j: i32) -> Option<&RowSpan> {
        if j < self.grid.j_bounds.0 || j > self.grid.j_bounds.1 {
            return None;
        }
        self.rows[(j - self.grid.j_bounds.0) as usize].as_ref()
    }

    fn row_value(&self, j: i32, span: &RowSpan, x: f64) -> f64 {
        let g = self.grid;
        let mut pts = Vec::with_capacity((span.i_hi - span.i_lo + 3) as usize);
        pts.push((span.x_left, 0.0));
        for i in span.i_lo..=span.i_hi {
            let k = g
                .index(i, j)
                .expect("rows of a convex domain are contiguous");
            pts.push((g.nodes[k].x, self.values[k]));
        }
        pts.push((span.x_right, 0.0));
        merge_close(&mut pts, 1e-8 * g.h);
        lagrange(window(&pts, x), x)
    }

    /// Interpolated `u` at an interior point; `0` outside the domain.
    pub fn value(&self, p: [f64; 2]) -> f64 {
        let g = self.grid;
        if !g.domain.contains(p) {
            return 0.0;
        }
        let h = g.h;
        let y_top = p[1] + g.domain.ray_exit(p, [0.0, 1.0]);
        let y_bottom = p[1] - g.domain.ray_exit(p, [0.0, -1.0]);
        let j_near = ((p[1] - g.origin[1]) / h).floor() as i32;
        let mut pts: Vec<(f64, i32)> = vec![(y_bottom, i32::MIN)];
        for j in j_near - 3..=j_near + 4 {
            let y = g.origin[1] + j as f64 * h;
            if y <= y_bottom || y >= y_top {
                continue;
            }
            if let Some(span) = self.row(j) {
                if span.x_left <= p[0] && p[0] <= span.x_right {
                    pts.push((y, j));
                }
            }
        }
        pts.push((y_top, i32::MAX));
        let mut with_values: Vec<(f64, f64)> = pts.iter().map(|&(y, _)| (y, f64::NAN)).collect();
        merge_close(&mut with_values, 1e-8 * h);
        let win = window(&with_values, p[1]).to_vec();
        let filled: Vec<(f64, f64)> = win
            .iter()
            .map(|&(y, _)| {
                let j = pts
                    .iter()
                    .find(|q| q.0 == y)
                    .map(|q| q.1)
                    .expect("row present");
                let val = if j == i32::MIN || j == i32::MAX {
                    0.0
                } else {
                    self.row_value(j, self.row(j).expect("row checked"), p[0])
                };
                (y, val)
            })
            .collect();
        lagrange(&filled, p[1])
    }
}

/// `Φ(·; β) = |∇u|² + β F(u)` at nodes and `u_n²` at boundary samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PFunction {
    pub beta: f64,
    pub interior: Vec<f64>,
    pub boundary: Vec<f64>,
}

impl PFunction {
    pub fn interior_min(&self) -> (f64, usize) {
        argmin(&self.interior)
    }

    pub fn boundary_min(&self) -> (f64, usize) {
        argmin(&self.boundary)
    }

    pub fn interior_range(&self) -> f64 {
        let (lo, _) = argmin(&self.interior);
        let hi = self
            .interior
            .iter()
            .fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        hi - lo
    }
}

fn argmin(xs: &[f64]) -> (f64, usize) {
    xs.iter().enumerate().fold(
        (f64::INFINITY, 0),
        |acc, (k, &x)| if x < acc.0 { (x, k) } else { acc },
    )
}

pub fn p_function(spec: &ProblemSpec, derived: &DerivedFields, beta: f64) -> Result<PFunction> {
    let interior = derived
        .values
        .iter()
        .zip(&derived.s_field)
        .map(|(&u, &s)| Ok(s + beta * spec.cumulative_f(u.min(0.0))?))
        .collect::<Result<Vec<_>>>()?;
    let boundary = derived.boundary.iter().map(|b| b.u_n * b.u_n).collect();
    Ok(PFunction {
        beta,
        interior,
        boundary,
    })
}

/// The transform `v = v(u)` with its nodal Hessian and, at core nodes, the
/// Hessian eigenvalues.
#[derive(Debug, Clone)]
pub struct VField {
    pub values: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
    pub hess: Vec<Hessian>,
    /// `(λ_min, λ_max)` at core nodes, `None` elsewhere.
    pub eigenvalues: Vec<Option<(f64, f64)>>,
}

impl VField {
    pub fn max_core_eigenvalue(&self) -> Option<(f64, usize)> {
        self.eigenvalues
            .iter()
            .enumerate()
            .filter_map(|(k, e)| e.map(|(_, hi)| (hi, k)))
            .fold(None, |acc: Option<(f64, usize)>, x| match acc {
                Some(a) if a.0 >= x.0 => Some(a),
                _ => Some(x),
            })
    }
}

pub fn v_field(spec: &ProblemSpec, derived: &DerivedFields) -> Result<VField> {
    let values = derived
        .values
        .iter()
        .map(|&u| spec.v_of_u(u.min(0.0)))
        .collect::<Result<Vec<_>>>()?;
    let grad = gradients(&derived.grid, &values, 0.0);
    let hess = hessians(&derived.grid, &values, &grad, 0.0);
    let eigenvalues = hess
        .iter()
        .zip(&derived.core_mask)
        .map(|(h, &core)| core.then(|| h.eigenvalues()))
        .collect();
    Ok(VField {
        values,
        grad,
        hess,
        eigenvalues,
    })
}

/// Residual of the equation satisfied by `v`, per selected node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeResidual {
    pub nodes: Vec<usize>,
    pub residual: Vec<f64>,
}

impl NodeResidual {
    pub fn max_abs(&self) -> f64 {
        self.residual.iter().fold(0.0, |m: f64, r| m.max(r.abs()))
    }

    pub fn min(&self) -> (f64, Option<usize>) {
        self.residual
            .iter()
            .zip(&self.nodes)
            .fold((f64::INFINITY, None), |acc, (&r, &k)| {
                if r < acc.0 {
                    (r, Some(k))
                } else {
                    acc
                }
            })
    }
}

/// `a_ij v_ij − b` at core nodes, with
/// `a_ij = (√F/f)((g/G) δ_ij + 2 (g'/G) F v_i v_j)` and
/// `b = −1 − |Dv|²/2`, coefficients at `s = F |Dv|²`.
pub fn v_equation_residual(
    spec: &ProblemSpec,
    derived: &DerivedFields,
    v: &VField,
) -> Result<NodeResidual> {
    v_equation_residual_where(spec, derived, v, |k| derived.core_mask[k])
}

/// [`v_equation_residual`] over the nodes accepted by `keep`.
pub fn v_equation_residual_where(
    spec: &ProblemSpec,
    derived: &DerivedFields,
    v: &VField,
    keep: impl Fn(usize) -> bool,
) -> Result<NodeResidual> {
    let mut nodes = Vec::new();
    let mut residual = Vec::new();
    for k in (0..derived.values.len()).filter(|&k| keep(k)) {
        let u = derived.values[k].min(0.0);
        let big_f = spec.cumulative_f(u)?;
        let f = spec.f.value(u);
        let [vx, vy] = v.grad[k];
        let dv2 = vx * vx + vy * vy;
        let d = spec.diffusivity(big_f * dv2)?;
        let iso = d.g / d.big_g;
        let aniso = 2.0 * d.g_prime / d.big_g * big_f;
        let hk = v.hess[k];
        let contraction =
            iso * hk.trace() + aniso * (vx * vx * hk.xx + 2.0 * vx * vy * hk.xy + vy * vy * hk.yy);
        let b = -1.0 - 0.5 * dv2;
        nodes.push(k);
        residual.push(big_f.sqrt() / f * contraction - b);
    }
    Ok(NodeResidual { nodes, residual })
}

/// RHS − LHS of the gradient–Hessian inequality
/// `u_ik u_ik |∇u|² ≤ |∇u|²(Δu)² + 2 u_ij u_i u_kj u_k − 2 Δu u_ij u_i u_j`
/// at core nodes with `|∇u|² ≥ CRITICAL_S`, with the per-node scale
/// `max(1, (Δu)² |∇u|²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityResidual {
    pub nodes: Vec<usize>,
    pub residual: Vec<f64>,
    pub scale: Vec<f64>,
}

impl InequalityResidual {
    /// Smallest `residual / scale`.
    pub fn min_scaled(&self) -> f64 {
        self.residual
            .iter()
            .zip(&self.scale)
            .fold(f64::INFINITY, |m, (r, s)| m.min(r / s))
    }
}

pub fn ps_inequality_residual(derived: &DerivedFields) -> InequalityResidual {
    let mut out = InequalityResidual {
        nodes: Vec::new(),
        residual: Vec::new(),
        scale: Vec::new(),
    };
    for k in derived.core_nodes() {
        let s = derived.s_field[k];
        if s < CRITICAL_S {
            continue;
        }
        let [ux, uy] = derived.grad[k];
        let Hessian { xx, xy, yy } = derived.hess[k];
        let lap = xx + yy;
        // H∇u
        let (hx, hy) = (xx * ux + xy * uy, xy * ux + yy * uy);
        let grad_h_grad = ux * hx + uy * hy;
        let frob = xx * xx + 2.0 * xy * xy + yy * yy;
        let rhs = s * lap * lap + 2.0 * (hx * hx + hy * hy) - 2.0 * lap * grad_h_grad;
        out.nodes.push(k);
        out.residual.push(rhs - frob * s);
        out.scale.push((lap * lap * s).max(1.0));
    }
    out
}

/// CSV `x,y,u,ux,uy,uxx,uxy,uyy,s,phi,v,v_lambda_max`; the last column is
/// empty outside the core.
pub fn derived_csv(derived: &DerivedFields, phi: &PFunction, v: &VField) -> String {
    let mut out = String::from("x,y,u,ux,uy,uxx,uxy,uyy,s,phi,v,v_lambda_max\n");
    for (k, node) in derived.grid.nodes.iter().enumerate() {
        let hk = derived.hess[k];
        let lam = v.eigenvalues[k]
            .map(|e| e.1.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            node.x,
            node.y,
            derived.values[k],
            derived.grad[k][0],
            derived.grad[k][1],
            hk.xx,
            hk.xy,
            hk.yy,
            derived.s_field[k],
            phi.interior[k],
            v.values[k],
            lam
        ));
    }
    out
}

/// Whether `k` is a node whose four arms are all lattice neighbours.
pub fn is_uniform_node(grid: &ClippedGrid, k: usize) -> bool {
    grid.nodes[k].arms.iter().all(|a| matches!(a, Arm::Node(_)))
}
