//! Shortley–Weller finite differences on a clipped grid.
//!
//! Arms that end on the boundary carry the Dirichlet value `boundary_value`
//! at distance `θh`. First and second derivatives along each axis come from
//! the quadratic through the three points, so they are exact for quadratics
//! regardless of the arm lengths. The mixed derivative differentiates the
//! first-derivative field of the vertical (horizontal) neighbours; it stays
//! within the 3×3 block of each node.

use crate::geometry::{Arm, ClippedGrid, Dir};

/// `u' ` at the centre of three points at `-h_minus`, `0`, `h_plus`.
#[inline]
pub fn first(u: f64, u_plus: f64, h_plus: f64, u_minus: f64, h_minus: f64) -> f64 {
    (h_minus * h_minus * (u_plus - u) + h_plus * h_plus * (u - u_minus))
        / (h_plus * h_minus * (h_plus + h_minus))
}

#[inline]
pub fn second(u: f64, u_plus: f64, h_plus: f64, u_minus: f64, h_minus: f64) -> f64 {
    2.0 * ((u_plus - u) / h_plus - (u - u_minus) / h_minus) / (h_plus + h_minus)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Hessian {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Hessian {
    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Eigenvalues `(λ_min, λ_max)` of the symmetric 2×2 matrix.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.xx + self.yy);
        let rad = (0.5 * (self.xx - self.yy)).hypot(self.xy);
        (mean - rad, mean + rad)
    }
}

#[inline]
fn arm_value(values: &[f64], arm: Arm, boundary_value: f64) -> f64 {
    match arm {
        Arm::Node(k) => values[k],
        Arm::Boundary(_) => boundary_value,
    }
}

fn axis(grid: &ClippedGrid, values: &[f64], k: usize, plus: Dir, minus: Dir, bv: f64) -> [f64; 4] {
    let node = &grid.nodes[k];
    let (ap, am) = (node.arm(plus), node.arm(minus));
    [
        arm_value(values, ap, bv),
        ap.theta() * grid.h,
        arm_value(values, am, bv),
        am.theta() * grid.h,
    ]
}

/// Gradient at every node.
pub fn gradients(grid: &ClippedGrid, values: &[f64], boundary_value: f64) -> Vec<[f64; 2]> {
    (0..grid.len())
        .map(|k| {
            let u = values[k];
            let [ue, he, uw, hw] = axis(grid, values, k, Dir::East, Dir::West, boundary_value);
            let [un, hn, us, hs] = axis(grid, values, k, Dir::North, Dir::South, boundary_value);
            [first(u, ue, he, uw, hw), first(u, un, hn, us, hs)]
        })
        .collect()
}

/// Hessian at every node given the gradient field from [`gradients`].
pub fn hessians(
    grid: &ClippedGrid,
    values: &[f64],
    grads: &[[f64; 2]],
    boundary_value: f64,
) -> Vec<Hessian> {
    let h = grid.h;
    (0..grid.len())
        .map(|k| {
            let u = values[k];
            let node = &grid.nodes[k];
            let [ue, he, uw, hw] = axis(grid, values, k, Dir::East, Dir::West, boundary_value);
            let [un, hn, us, hs] = axis(grid, values, k, Dir::North, Dir::South, boundary_value);
            let cross = |plus: Arm, minus: Arm, comp: usize| -> Option<f64> {
                match (plus, minus) {
                    (Arm::Node(p), Arm::Node(m)) => {
                        Some((grads[p][comp] - grads[m][comp]) / (2.0 * h))
                    }
                    (Arm::Node(p), Arm::Boundary(_)) => Some((grads[p][comp] - grads[k][comp]) / h),
                    (Arm::Boundary(_), Arm::Node(m)) => Some((grads[k][comp] - grads[m][comp]) / h),
                    _ => None,
                }
            };
            let dy_ux = cross(node.arm(Dir::North), node.arm(Dir::South), 0);
            let dx_uy = cross(node.arm(Dir::East), node.arm(Dir::West), 1);
            let xy = match (dy_ux, dx_uy) {
                (Some(a), Some(b)) => 0.5 * (a + b),
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => 0.0,
            };
            Hessian {
                xx: second(u, ue, he, uw, hw),
                xy,
                yy: second(u, un, hn, us, hs),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_grid, ConvexDomain};

    #[test]
    fn unequal_arms_exact_on_quadratic() {
        let q = |x: f64| 3.0 * x * x - 2.0 * x + 0.5;
        let (hp, hm) = (0.013, 0.05);
        let x0 = 0.2;
        let d1 = first(q(x0), q(x0 + hp), hp, q(x0 - hm), hm);
        let d2 = second(q(x0), q(x0 + hp), hp, q(x0 - hm), hm);
        assert!((d1 - (6.0 * x0 - 2.0)).abs() < 1e-11);
        assert!((d2 - 6.0).abs() < 1e-9);
    }

    #[test]
    fn exact_on_quadratic_field_vanishing_on_circle() {
        let grid = make_grid(&ConvexDomain::disk(1.0).unwrap(), 1.0 / 16.0).unwrap();
        let u: Vec<f64> = grid
            .nodes
            .iter()
            .map(|n| 0.25 * (n.x * n.x + n.y * n.y - 1.0))
            .collect();
        let g = gradients(&grid, &u, 0.0);
        let hs = hessians(&grid, &u, &g, 0.0);
        for (k, n) in grid.nodes.iter().enumerate() {
            assert!((g[k][0] - 0.5 * n.x).abs() < 1e-10);
            assert!((g[k][1] - 0.5 * n.y).abs() < 1e-10);
            assert!((hs[k].xx - 0.5).abs() < 1e-9);
            assert!((hs[k].yy - 0.5).abs() < 1e-9);
            assert!(hs[k].xy.abs() < 1e-9);
        }
    }

    #[test]
    fn eigenvalues_closed_form() {
        let h = Hessian {
            xx: 2.0,
            xy: 1.0,
            yy: 2.0,
        };
        assert_eq!(h.eigenvalues(), (1.0, 3.0));
    }
}
