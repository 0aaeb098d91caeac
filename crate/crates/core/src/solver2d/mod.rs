//! Finite-difference solver for the planar Dirichlet problem.
//!
//! The operator is discretized in non-divergence form,
//!
//! ```text
//! (g/G) Δu + (2g'/G)(u_x² u_xx + 2 u_x u_y u_xy + u_y² u_yy) − λ f(u) = 0,
//! ```
//!
//! with Shortley–Weller stencils and `u = 0` at the boundary ends of the
//! arms. Newton's method with a finite-difference Jacobian is run along a
//! continuation schedule in `λ`, starting from `u ≡ 0`.

pub mod sparse;
pub mod stencil;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ClippedGrid;
use crate::problem::ProblemSpec;
use sparse::{bicgstab, CsrMatrix};
use stencil::{gradients, hessians};

/// One line of the solver log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub lambda: f64,
    pub iter: usize,
    /// Max-norm of the residual after the step.
    pub residual_norm: f64,
    /// Line-search factor applied to the Newton direction (0 for the
    /// initial evaluation at each load).
    pub step_damping: f64,
}

/// Converged nodal solution on a clipped grid.
#[derive(Debug, Clone)]
pub struct Field2D {
    pub grid: ClippedGrid,
    /// `u` at the interior nodes; `u = 0` on the boundary.
    pub values: Vec<f64>,
    pub converged: bool,
    pub residual_norm: f64,
    pub lambda: f64,
    pub log: Vec<LogEntry>,
}

impl Field2D {
    /// `u ≡ 0` on `grid` (the exact solution at `λ = 0`).
    pub fn zero(grid: &ClippedGrid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
            converged: true,
            residual_norm: 0.0,
            lambda: 0.0,
            log: Vec::new(),
        }
    }

    /// Minimum nodal value and its node index.
    pub fn u_min(&self) -> (f64, usize) {
        self.values
            .iter()
            .enumerate()
            .fold(
                (f64::INFINITY, 0),
                |acc, (k, &u)| if u < acc.0 { (u, k) } else { acc },
            )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,x,y,u\n");
        for (node, u) in self.grid.nodes.iter().zip(&self.values) {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                node.i, node.j, node.x, node.y, u
            ));
        }
        out
    }

    pub fn log_jsonl(&self) -> String {
        log_lines(&self.log)
    }
}

fn log_lines(log: &[LogEntry]) -> String {
    log.iter()
        .map(|e| serde_json::to_string(e).expect("log entries serialize") + "\n")
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    NonConvergence,
    ExistenceFailure,
    LinearSolver,
}

/// Why continuation stopped short of the final load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveFailure {
    pub kind: FailureKind,
    /// Load at which Newton failed.
    pub lambda: f64,
    /// Last load that converged.
    pub lambda_reached: f64,
    pub message: String,
    pub history: Vec<LogEntry>,
}

impl SolveFailure {
    pub fn log_jsonl(&self) -> String {
        log_lines(&self.history)
    }
}

#[derive(Debug, Clone)]
pub enum SolveOutcome {
    Converged(Field2D),
    Failed(SolveFailure),
}

impl SolveOutcome {
    pub fn field(&self) -> Option<&Field2D> {
        match self {
            SolveOutcome::Converged(f) => Some(f),
            SolveOutcome::Failed(_) => None,
        }
    }

    pub fn into_field(self) -> Option<Field2D> {
        match self {
            SolveOutcome::Converged(f) => Some(f),
            SolveOutcome::Failed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOptions {
    /// Increasing loads; the last one is normally 1.
    pub schedule: Vec<f64>,
    /// Max-norm residual at which a load counts as converged.
    pub tol: f64,
    pub max_iter: usize,
    pub linear_tol: f64,
    /// Jacobian perturbation relative to `max(1, ‖u‖∞)`.
    pub fd_step: f64,
    /// Relative safety margin below `s_limit`.
    pub s_margin: f64,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            schedule: vec![0.25, 0.5, 0.75, 0.9, 1.0],
            tol: 1e-10,
            max_iter: 50,
            linear_tol: 1e-10,
            fd_step: 1e-7,
            s_margin: 1e-6,
            max_halvings: 40,
        }
    }
}

fn check_planar(spec: &ProblemSpec) -> Result<()> {
    if spec.n != 2 {
        return Err(Error::Unsupported(format!(
            "the grid solver is planar; spec has n = {}",
            spec.n
        )));
    }
    Ok(())
}

fn spacelike_at(grid: &ClippedGrid, k: usize, s: f64, s_limit: f64) -> Error {
    let node = &grid.nodes[k];
    Error::Spacelike {
        s,
        s_limit,
        location: format!("node ({}, {}) at ({}, {})", node.i, node.j, node.x, node.y),
    }
}

/// Largest `|∇u|²` over the nodes and where it occurs.
pub fn max_slope_sq(grid: &ClippedGrid, values: &[f64]) -> (f64, usize) {
    gradients(grid, values, 0.0)
        .iter()
        .enumerate()
        .fold((0.0, 0), |acc, (k, g)| {
            let s = g[0] * g[0] + g[1] * g[1];
            if s > acc.0 {
                (s, k)
            } else {
                acc
            }
        })
}

/// Nodal residual of the discrete operator at load `lambda`.
pub fn residual(
    spec: &ProblemSpec,
    grid: &ClippedGrid,
    values: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    check_planar(spec)?;
    if let Some(k) = values.iter().position(|u| !u.is_finite()) {
        return Err(Error::DomainViolation {
            what: "u",
            value: values[k],
            range: "finite".into(),
        });
    }
    let grads = gradients(grid, values, 0.0);
    let hess = hessians(grid, values, &grads, 0.0);
    let mut out = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let [ux, uy] = grads[k];
        let s = ux * ux + uy * uy;
        if s >= spec.s_limit {
            return Err(spacelike_at(grid, k, s, spec.s_limit));
        }
        let d = spec.diffusivity(s)?;
        let hk = hess[k];
        let quad = ux * ux * hk.xx + 2.0 * ux * uy * hk.xy + uy * uy * hk.yy;
        out.push(
            (d.g * hk.trace() + 2.0 * d.g_prime * quad) / d.big_g
                - lambda * spec.f.value(values[k]),
        );
    }
    Ok(out)
}

fn max_norm(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2_norm(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// 3×3 block sparsity with the nine lattice colours `(i mod 3, j mod 3)`.
struct JacobianPattern {
    matrix: CsrMatrix,
    col_color: Vec<usize>,
}

fn color(i: i32, j: i32) -> usize {
    (i.rem_euclid(3) + 3 * j.rem_euclid(3)) as usize
}

impl JacobianPattern {
    fn new(grid: &ClippedGrid) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        for node in &grid.nodes {
            let mut row: Vec<usize> = (-1..=1)
                .flat_map(|dj| (-1..=1).map(move |di| (di, dj)))
                .filter_map(|(di, dj)| grid.index(node.i + di, node.j + dj))
                .collect();
            row.sort_unstable();
            cols.extend(row);
            row_ptr.push(cols.len());
        }
        let col_color = grid.nodes.iter().map(|n| color(n.i, n.j)).collect();
        let vals = vec![0.0; cols.len()];
        Self {
            matrix: CsrMatrix {
                n: grid.len(),
                row_ptr,
                cols,
                vals,
            },
            col_color,
        }
    }
}

fn assemble_jacobian(
    spec: &ProblemSpec,
    grid: &ClippedGrid,
    pattern: &mut JacobianPattern,
    values: &[f64],
    base: &[f64],
    lambda: f64,
    fd_step: f64,
) -> Result<()> {
    let scale = values.iter().fold(1.0f64, |m, u| m.max(u.abs()));
    let eps = fd_step * scale;
    let mut shifted = values.to_vec();
    for c in 0..9 {
        for (k, u) in shifted.iter_mut().enumerate() {
            *u = if pattern.col_color[k] == c {
                values[k] + eps
            } else {
                values[k]
            };
        }
        let r = residual(spec, grid, &shifted, lambda)?;
        let m = &mut pattern.matrix;
        for row in 0..m.n {
            for p in m.row_ptr[row]..m.row_ptr[row + 1] {
                if pattern.col_color[m.cols[p]] == c {
                    m.vals[p] = (r[row] - base[row]) / eps;
                }
            }
        }
    }
    Ok(())
}

/// Damped Newton with load continuation, starting from `u ≡ 0`.
///
/// Errors are reserved for invalid input; running out of iterations or of
/// admissible steps is reported as [`SolveOutcome::Failed`].
pub fn newton_solve(
    spec: &ProblemSpec,
    grid: &ClippedGrid,
    opts: &NewtonOptions,
) -> Result<SolveOutcome> {
    check_planar(spec)?;
    if opts.schedule.windows(2).any(|w| w[1] <= w[0]) || opts.schedule.iter().any(|&l| !(l >= 0.0))
    {
        return Err(Error::DomainViolation {
            what: "lambda schedule",
            value: f64::NAN,
            range: "strictly increasing, non-negative".into(),
        });
    }
    let n = grid.len();
    let s_cap = spec.s_limit * (1.0 - opts.s_margin);
    let mut pattern = JacobianPattern::new(grid);
    let mut u = vec![0.0; n];
    let mut log = Vec::new();
    let mut lambda_reached = 0.0;
    let mut final_norm = 0.0;

    let fail = |kind, lambda, lambda_reached, message: String, log: &Vec<LogEntry>| {
        Ok(SolveOutcome::Failed(SolveFailure {
            kind,
            lambda,
            lambda_reached,
            message,
            history: log.clone(),
        }))
    };

    for &lambda in &opts.schedule {
        let mut r = residual(spec, grid, &u, lambda)?;
        let mut r_max = max_norm(&r);
        log.push(LogEntry {
            lambda,
            iter: 0,
            residual_norm: r_max,
            step_damping: 0.0,
        });
        let mut iter = 0;
        while r_max > opts.tol {
            if iter == opts.max_iter {
                return fail(
                    FailureKind::NonConvergence,
                    lambda,
                    lambda_reached,
                    format!("residual {r_max:e} after {iter} Newton steps"),
                    &log,
                );
            }
            iter += 1;
            if let Err(e) =
                assemble_jacobian(spec, grid, &mut pattern, &u, &r, lambda, opts.fd_step)
            {
                return fail(
                    FailureKind::ExistenceFailure,
                    lambda,
                    lambda_reached,
                    e.to_string(),
                    &log,
                );
            }
            let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
            let (delta, stats) = bicgstab(&pattern.matrix, &rhs, opts.linear_tol, 20 * n.max(100));
            if !(stats.relative_residual <= 1e-3) {
                return fail(
                    FailureKind::LinearSolver,
                    lambda,
                    lambda_reached,
                    format!(
                        "linear solve stopped at relative residual {:e} after {} iterations",
                        stats.relative_residual, stats.iterations
                    ),
                    &log,
                );
            }

            let r_l2 = l2_norm(&r);
            let mut damping = 1.0;
            let mut accepted = None;
            let mut margin_blocked = false;
            for _ in 0..=opts.max_halvings {
                let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + damping * d).collect();
                let (s_max, _) = max_slope_sq(grid, &trial);
                if s_max > s_cap {
                    margin_blocked = true;
                } else if let Ok(r_trial) = residual(spec, grid, &trial, lambda) {
                    if l2_norm(&r_trial) < r_l2 {
                        accepted = Some((trial, r_trial));
                        break;
                    }
                }
                damping *= 0.5;
            }
            let Some((trial, r_trial)) = accepted else {
                let (kind, message) = if margin_blocked {
                    (
                        FailureKind::ExistenceFailure,
                        format!("no damped step keeps |grad u|^2 below {s_cap}"),
                    )
                } else {
                    (
                        FailureKind::NonConvergence,
                        format!("line search stalled at residual {r_max:e}"),
                    )
                };
                return fail(kind, lambda, lambda_reached, message, &log);
            };
            u = trial;
            r = r_trial;
            r_max = max_norm(&r);
            log.push(LogEntry {
                lambda,
                iter,
                residual_norm: r_max,
                step_damping: damping,
            });
        }
        lambda_reached = lambda;
        final_norm = r_max;
    }

    Ok(SolveOutcome::Converged(Field2D {
        grid: grid.clone(),
        values: u,
        converged: true,
        residual_norm: final_norm,
        lambda: lambda_reached,
        log,
    }))
}

/// [`newton_solve`] with the default schedule and tolerances.
pub fn solve(spec: &ProblemSpec, grid: &ClippedGrid) -> Result<SolveOutcome> {
    newton_solve(spec, grid, &NewtonOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_grid, ConvexDomain};
    use crate::problem::{Coefficient, ProblemSpec};
    use crate::radial::{shoot, ShootOptions};

    fn unit_disk(h: f64) -> ClippedGrid {
        make_grid(&ConvexDomain::disk(1.0).unwrap(), h).unwrap()
    }

    #[test]
    fn zero_field_zero_load() {
        let grid = unit_disk(1.0 / 16.0);
        let u = vec![0.0; grid.len()];
        let r = residual(&ProblemSpec::euclidean(2), &grid, &u, 0.0).unwrap();
        assert!(r.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn quadratic_solves_discrete_poisson() {
        let grid = unit_disk(1.0 / 32.0);
        let u: Vec<f64> = grid
            .nodes
            .iter()
            .map(|n| 0.25 * (n.x * n.x + n.y * n.y - 1.0))
            .collect();
        let r = residual(&ProblemSpec::poisson(2), &grid, &u, 1.0).unwrap();
        assert!(max_norm(&r) < 1e-9, "{}", max_norm(&r));
        let interior_max = grid
            .nodes
            .iter()
            .zip(&r)
            .filter(|(n, _)| !n.touches_boundary())
            .fold(0.0f64, |m, (_, x)| m.max(x.abs()));
        assert!(interior_max < 1e-12);
    }

    #[test]
    fn poisson_residual_is_laplacian_minus_load() {
        let grid = unit_disk(1.0 / 16.0);
        let u: Vec<f64> = grid
            .nodes
            .iter()
            .map(|n| (n.x * 3.0).sin() * n.y - 0.3)
            .collect();
        let r = residual(&ProblemSpec::poisson(2), &grid, &u, 0.7).unwrap();
        let g = gradients(&grid, &u, 0.0);
        let hs = hessians(&grid, &u, &g, 0.0);
        for k in 0..grid.len() {
            assert!((r[k] - (hs[k].trace() - 0.7)).abs() < 1e-12);
        }
    }

    #[test]
    fn spacelike_violation_names_node() {
        let grid = unit_disk(1.0 / 16.0);
        let u: Vec<f64> = grid.nodes.iter().map(|n| 2.0 * n.x).collect();
        match residual(&ProblemSpec::lorentzian(2), &grid, &u, 1.0) {
            Err(Error::Spacelike { location, .. }) => assert!(location.starts_with("node")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn poisson_disk_minimum() {
        let out = solve(&ProblemSpec::poisson(2), &unit_disk(1.0 / 64.0)).unwrap();
        let field = out.into_field().unwrap();
        let (u_min, _) = field.u_min();
        assert!((u_min + 0.25).abs() <= 5e-4, "{u_min}");
        assert!(field.values.iter().all(|&u| u < 0.0));
    }

    #[test]
    fn euclidean_disk_matches_radial() {
        let spec = ProblemSpec::euclidean(2);
        let field = solve(&spec, &unit_disk(1.0 / 64.0))
            .unwrap()
            .into_field()
            .unwrap();
        let radial = shoot(&spec, 2, 1.0, ShootOptions::default())
            .unwrap()
            .into_solution()
            .unwrap();
        assert!((field.u_min().0 - radial.phi0).abs() <= 5e-3);
        let last = &field.log[field.log.len() - 2..];
        assert!(last[0].residual_norm >= 10.0 * last[1].residual_norm);
    }

    #[test]
    fn zero_schedule_returns_zero() {
        let opts = NewtonOptions {
            schedule: vec![0.0],
            ..Default::default()
        };
        let spec = ProblemSpec::new(
            "exp",
            Coefficient::Constant(1.0),
            Coefficient::Exponential {
                offset: 0.0,
                scale: 1.0,
                rate: 1.0,
            },
            f64::INFINITY,
            2,
        )
        .unwrap();
        let field = newton_solve(&spec, &unit_disk(0.1), &opts)
            .unwrap()
            .into_field()
            .unwrap();
        assert!(field.values.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn rejects_non_planar_spec() {
        assert!(matches!(
            solve(&ProblemSpec::euclidean(3), &unit_disk(0.1)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn csv_and_log_shapes() {
        let field = solve(&ProblemSpec::poisson(2), &unit_disk(0.1))
            .unwrap()
            .into_field()
            .unwrap();
        let csv = field.to_csv();
        assert_eq!(csv.lines().count(), field.grid.len() + 1);
        for line in field.log_jsonl().lines() {
            let e: LogEntry = serde_json::from_str(line).unwrap();
            assert!(e.residual_norm.is_finite());
        }
    }
}
