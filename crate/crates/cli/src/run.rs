//! Mode implementations. Every artifact goes through [`write_atomic`].

use std::fs;
use std::io::Write;
use std::path::Path;

use quasilin::fields::{derive, derived_csv, p_function, v_field};
use quasilin::geometry::DomainKind;
use quasilin::problem::ProblemConfig;
use quasilin::radial::{
    radial_convexity_check, shoot, RadialConvexityReport, ShootOptions, ShootOutcome,
};
use quasilin::solver2d::{newton_solve, Field2D, NewtonOptions, SolveFailure, SolveOutcome};
use quasilin::verify::{
    bounds_row, lorentz_validity_map, radial_bounds, verify, verify_field, BoundsRow,
    RadialBoundsReport, ValidityMap, VerificationReport, VerifyOptions, VerifyOutcome,
};
use quasilin::{make_grid, ConvexDomain, Error, ProblemSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Mode, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass = 0,
    CheckFailure = 1,
    SolverFailure = 2,
    ConfigError = 3,
}

/// A run that stopped before producing its artifacts.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Solver(String),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Spacelike { .. } | Error::NonMonotoneShooting(_) => {
                RunError::Solver(e.to_string())
            }
            _ => RunError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Config(format!("output: {e}"))
    }
}

type RunResult<T> = std::result::Result<T, RunError>;

/// Writes `contents` to a temporary file in the same directory and renames
/// it into place.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> std::io::Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| e.error)?;
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> RunResult<()> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize") + "\n";
    Ok(write_atomic(dir, name, &text)?)
}

pub fn spec_of(cfg: &RunConfig) -> RunResult<ProblemSpec> {
    Ok(ProblemSpec::from_config(&ProblemConfig {
        name: cfg.problem.clone(),
        g: cfg.g.clone(),
        f: cfg.f.clone(),
        n: cfg.n,
        s_limit: cfg.s_limit,
    })?)
}

fn domain_of(cfg: &RunConfig) -> RunResult<ConvexDomain> {
    let text = cfg
        .domain
        .as_deref()
        .ok_or_else(|| RunError::Config("missing `domain`".into()))?;
    Ok(text.parse()?)
}

fn newton_options(cfg: &RunConfig) -> NewtonOptions {
    NewtonOptions {
        schedule: cfg.lambda.clone(),
        tol: cfg.tol_newton,
        ..NewtonOptions::default()
    }
}

fn verify_options(cfg: &RunConfig) -> VerifyOptions {
    VerifyOptions {
        betas: cfg.beta.clone(),
        newton: newton_options(cfg),
        order_study: cfg.order_study,
        tolerances: cfg.tolerances,
    }
}

/// Runs the configured mode and writes its artifacts into `out_dir`.
pub fn run(cfg: &RunConfig) -> RunResult<Status> {
    cfg.validate().map_err(RunError::Config)?;
    let spec = spec_of(cfg)?;
    let dir = cfg.out_dir.as_path();
    fs::create_dir_all(dir)?;
    write_atomic(dir, "run_config.txt", &cfg.to_flat())?;
    let outcome = match cfg.mode {
        Mode::Radial => run_radial(cfg, &spec),
        Mode::Solve2d => run_solve2d(cfg, &spec),
        Mode::Verify => run_verify(cfg, &spec),
        Mode::Bounds => run_bounds(cfg),
        Mode::Sweep => run_sweep(cfg, &spec),
    };
    match outcome {
        Err(RunError::Solver(message)) => {
            write_json(
                dir,
                "failure.json",
                &ErrorFailure {
                    kind: "solver_error",
                    message: &message,
                },
            )?;
            println!("solver failure: {message}");
            Ok(Status::SolverFailure)
        }
        other => other,
    }
}

#[derive(Serialize)]
struct ErrorFailure<'a> {
    kind: &'a str,
    message: &'a str,
}

#[derive(Serialize)]
struct ProfileSummary {
    radius: f64,
    n: usize,
    h_r: f64,
    phi0: f64,
    u_min: f64,
    boundary_slope: f64,
}

#[derive(Serialize)]
struct RadialReport {
    problem: ProblemConfig,
    profile: ProfileSummary,
    convexity: RadialConvexityReport,
    bounds: RadialBoundsReport,
    pass: bool,
}

fn run_radial(cfg: &RunConfig, spec: &ProblemSpec) -> RunResult<Status> {
    let dir = cfg.out_dir.as_path();
    let radius = cfg.radius.expect("validated");
    let opts = ShootOptions {
        tol: cfg.tol_shoot,
        h_r: cfg.h_r,
    };
    let sol = match shoot(spec, cfg.n, radius, opts)? {
        ShootOutcome::Converged(s) => s,
        ShootOutcome::ExistenceFailure(f) => {
            write_json(dir, "failure.json", &f)?;
            println!("existence failure at R = {radius}: {}", f.reason);
            return Ok(Status::SolverFailure);
        }
    };
    let convexity = radial_convexity_check(&sol, spec)?;
    let bounds = radial_bounds(spec, &sol, &cfg.tolerances)?;
    let pass = convexity.pass
        && bounds.upper_bound.pass
        && bounds
            .lower_bound
            .as_ref()
            .and_then(|l| l.pass)
            .unwrap_or(true);
    write_atomic(dir, "profile.csv", &sol.to_csv())?;
    let report = RadialReport {
        problem: spec.to_config(),
        profile: ProfileSummary {
            radius: sol.radius,
            n: sol.n,
            h_r: sol.h_r,
            phi0: sol.phi0,
            u_min: sol.u_min(),
            boundary_slope: sol.boundary_slope(),
        },
        convexity,
        bounds,
        pass,
    };
    write_json(dir, "radial_report.json", &report)?;
    println!("radial: phi0 = {}, pass = {pass}", sol.phi0);
    Ok(if pass {
        Status::Pass
    } else {
        Status::CheckFailure
    })
}

#[derive(Serialize)]
struct SolveSummary {
    problem: ProblemConfig,
    domain: String,
    h: f64,
    nodes: usize,
    u_min: f64,
    u_min_location: [f64; 2],
    residual_norm: f64,
    newton_steps: usize,
}

fn write_failure(dir: &Path, failure: &SolveFailure) -> RunResult<Status> {
    write_json(dir, "failure.json", failure)?;
    write_atomic(dir, "solver_log.jsonl", &failure.log_jsonl())?;
    println!(
        "solver failure at lambda = {}: {}",
        failure.lambda, failure.message
    );
    Ok(Status::SolverFailure)
}

fn run_solve2d(cfg: &RunConfig, spec: &ProblemSpec) -> RunResult<Status> {
    let dir = cfg.out_dir.as_path();
    let domain = domain_of(cfg)?;
    let grid = make_grid(&domain, cfg.h.expect("validated"))?;
    let field = match newton_solve(spec, &grid, &newton_options(cfg))? {
        SolveOutcome::Converged(f) => f,
        SolveOutcome::Failed(f) => return write_failure(dir, &f),
    };
    write_atomic(dir, "field.csv", &field.to_csv())?;
    write_atomic(dir, "grid.csv", &grid.to_csv())?;
    write_atomic(dir, "solver_log.jsonl", &field.log_jsonl())?;
    let (u_min, k) = field.u_min();
    let node = &grid.nodes[k];
    write_json(
        dir,
        "solve_summary.json",
        &SolveSummary {
            problem: spec.to_config(),
            domain: domain.to_string(),
            h: grid.h,
            nodes: grid.len(),
            u_min,
            u_min_location: [node.x, node.y],
            residual_norm: field.residual_norm,
            newton_steps: field.log.iter().filter(|e| e.iter > 0).count(),
        },
    )?;
    println!("solve2d: {} nodes, u_min = {u_min}", grid.len());
    Ok(Status::Pass)
}

enum Solved {
    Fields(Box<Field2D>, Option<Field2D>),
    Failed(SolveFailure),
}

fn solve_with_coarse(
    spec: &ProblemSpec,
    domain: &ConvexDomain,
    h: f64,
    cfg: &RunConfig,
) -> RunResult<Solved> {
    let opts = newton_options(cfg);
    let fine = match newton_solve(spec, &make_grid(domain, h)?, &opts)? {
        SolveOutcome::Converged(f) => f,
        SolveOutcome::Failed(f) => return Ok(Solved::Failed(f)),
    };
    if !cfg.order_study {
        return Ok(Solved::Fields(Box::new(fine), None));
    }
    let coarse = match make_grid(domain, 2.0 * h) {
        Ok(g) => match newton_solve(spec, &g, &opts)? {
            SolveOutcome::Converged(f) => Some(f),
            SolveOutcome::Failed(f) => return Ok(Solved::Failed(f)),
        },
        Err(Error::GridTooCoarse { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(Solved::Fields(Box::new(fine), coarse))
}

fn run_verify(cfg: &RunConfig, spec: &ProblemSpec) -> RunResult<Status> {
    let dir = cfg.out_dir.as_path();
    let domain = domain_of(cfg)?;
    let (fine, coarse) = match solve_with_coarse(spec, &domain, cfg.h.expect("validated"), cfg)? {
        Solved::Fields(f, c) => (f, c),
        Solved::Failed(f) => return write_failure(dir, &f),
    };
    let report = verify_field(spec, &fine, coarse.as_ref(), &verify_options(cfg))?;
    let derived = derive(&fine)?;
    let phi = p_function(spec, &derived, cfg.beta[0])?;
    let v = v_field(spec, &derived)?;
    write_atomic(dir, "field.csv", &fine.to_csv())?;
    write_atomic(dir, "derived.csv", &derived_csv(&derived, &phi, &v))?;
    write_json(dir, "report.json", &report)?;
    println!(
        "verify: {} nodes, u_min = {}, pass = {}",
        report.nodes, report.u_min, report.pass
    );
    Ok(if report.pass {
        Status::Pass
    } else {
        Status::CheckFailure
    })
}

#[derive(Serialize)]
struct BoundsTable {
    rows: Vec<BoundsRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    validity_map: Option<ValidityMap>,
}

fn run_bounds(cfg: &RunConfig) -> RunResult<Status> {
    let dir = cfg.out_dir.as_path();
    let rows = cfg
        .alpha_values()
        .into_iter()
        .map(bounds_row)
        .collect::<quasilin::Result<Vec<_>>>()?;
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut csv = String::from("alpha,euclidean,lorentzian\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{}\n",
            r.alpha,
            cell(r.euclidean),
            cell(r.lorentzian)
        ));
    }
    let validity_map = if cfg.validity_radii.is_empty() {
        None
    } else {
        Some(lorentz_validity_map(
            cfg.n,
            &cfg.validity_radii,
            cfg.existence_bracket,
            1e-3 * cfg.existence_bracket[0],
            &cfg.tolerances,
        )?)
    };
    write_atomic(dir, "bounds.csv", &csv)?;
    write_json(dir, "bounds.json", &BoundsTable { rows, validity_map })?;
    println!("bounds: wrote {} rows", csv.lines().count() - 1);
    Ok(Status::Pass)
}

#[derive(Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
enum Rung {
    Report(Box<VerificationReport>),
    SolverFailure { h: f64, failure: SolveFailure },
}

#[derive(Serialize)]
struct SweepRow {
    h: f64,
    nodes: Option<usize>,
    u_min: Option<f64>,
    /// Distance to the radial value on a disk.
    u_min_error: Option<f64>,
    /// `err(previous rung) / err(this rung)`.
    error_ratio: Option<f64>,
    boundary_identity_max: Option<f64>,
    v_equation_max_core: Option<f64>,
    pass: Option<bool>,
}

#[derive(Serialize)]
struct SweepReport {
    domain: String,
    radial_u_min: Option<f64>,
    rows: Vec<SweepRow>,
    rungs: Vec<Rung>,
}

fn radial_reference(
    spec: &ProblemSpec,
    domain: &ConvexDomain,
    cfg: &RunConfig,
) -> RunResult<Option<f64>> {
    let DomainKind::Disk { r: radius } = domain.kind() else {
        return Ok(None);
    };
    let opts = ShootOptions {
        tol: cfg.tol_shoot,
        h_r: cfg.h_r,
    };
    Ok(shoot(spec, cfg.n, radius, opts)?
        .solution()
        .map(|s| s.u_min()))
}

fn run_sweep(cfg: &RunConfig, spec: &ProblemSpec) -> RunResult<Status> {
    let dir = cfg.out_dir.as_path();
    let domain = domain_of(cfg)?;
    let opts = verify_options(cfg);
    let rungs = cfg
        .ladder_values()
        .into_par_iter()
        .map(|h| {
            Ok(match verify(spec, &domain, h, &opts)? {
                VerifyOutcome::Report(r) => Rung::Report(r),
                VerifyOutcome::SolverFailure(failure) => Rung::SolverFailure { h, failure },
            })
        })
        .collect::<RunResult<Vec<_>>>()?;
    let reference = radial_reference(spec, &domain, cfg)?;
    let mut rows: Vec<SweepRow> = Vec::new();
    for (rung, h) in rungs.iter().zip(cfg.ladder_values()) {
        let row = match rung {
            Rung::Report(r) => {
                let err = reference.map(|u| (r.u_min - u).abs());
                let prev = rows.last().and_then(|p| p.u_min_error);
                SweepRow {
                    h,
                    nodes: Some(r.nodes),
                    u_min: Some(r.u_min),
                    u_min_error: err,
                    error_ratio: prev.zip(err).map(|(a, b)| a / b),
                    boundary_identity_max: Some(r.boundary_identity.max_residual),
                    v_equation_max_core: Some(r.v_equation.max_residual_core),
                    pass: Some(r.pass),
                }
            }
            Rung::SolverFailure { .. } => SweepRow {
                h,
                nodes: None,
                u_min: None,
                u_min_error: None,
                error_ratio: None,
                boundary_identity_max: None,
                v_equation_max_core: None,
                pass: None,
            },
        };
        rows.push(row);
    }
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut csv = String::from(
        "h,nodes,u_min,u_min_error,error_ratio,boundary_identity_max,v_equation_max_core,pass\n",
    );
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.h,
            r.nodes.map(|n| n.to_string()).unwrap_or_default(),
            cell(r.u_min),
            cell(r.u_min_error),
            cell(r.error_ratio),
            cell(r.boundary_identity_max),
            cell(r.v_equation_max_core),
            r.pass.map(|p| p.to_string()).unwrap_or_default()
        ));
    }
    let failed = rows.iter().any(|r| r.pass.is_none());
    let all_pass = rows.iter().all(|r| r.pass == Some(true));
    write_atomic(dir, "sweep.csv", &csv)?;
    write_json(
        dir,
        "sweep.json",
        &SweepReport {
            domain: domain.to_string(),
            radial_u_min: reference,
            rows,
            rungs,
        },
    )?;
    println!(
        "sweep: {} rungs, all pass = {all_pass}",
        cfg.ladder_values().len()
    );
    Ok(if failed {
        Status::SolverFailure
    } else if all_pass {
        Status::Pass
    } else {
        Status::CheckFailure
    })
}
