//! `quasilin`: command-line front end for the quasilinear Dirichlet lab.
//!
//! Exit codes: 0 every check passed, 1 a check failed, 2 the solver failed,
//! 3 the configuration was rejected.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Mode, RunConfig};
use run::{RunError, Status};

#[derive(Parser)]
#[command(
    name = "quasilin",
    version,
    about = "Solve and verify div(g(|∇u|²)∇u) = f(u)G(|∇u|²) with u = 0 on convex domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Shoot the radial profile on a ball and check convexity and bounds
    Radial(Flags),
    /// Solve on a clipped grid and dump the field
    #[command(name = "solve2d")]
    Solve2d(Flags),
    /// Solve and run every verification check
    Verify(Flags),
    /// Tabulate the curvature lower bounds over a range of alpha
    Bounds(Flags),
    /// Repeat verify over a ladder of grid spacings
    Sweep(Flags),
}

/// Every flag overrides the key of the same name in `--config`.
#[derive(Args, Debug, Default)]
struct Flags {
    /// Flat `key = value` file applied before the flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// euclidean, lorentzian, poisson or a custom name with --g and --f
    #[arg(long)]
    problem: Option<String>,
    /// Diffusivity descriptor, e.g. pow:1,1,-0.5 or exp:0,1,-1
    #[arg(long)]
    g: Option<String>,
    /// Source descriptor, e.g. const:1 or poly:1,0.5
    #[arg(long)]
    f: Option<String>,
    /// Dimension (radial mode only; the grid solver is planar)
    #[arg(long)]
    n: Option<String>,
    #[arg(long = "s-limit")]
    s_limit: Option<String>,
    /// disk:R=1, ellipse:a=2,b=1 or blob:R=1,eps=0.05,k=3
    #[arg(long)]
    domain: Option<String>,
    /// Grid spacing
    #[arg(long)]
    h: Option<String>,
    /// Radial step
    #[arg(long = "h-r")]
    h_r: Option<String>,
    /// Ball radius
    #[arg(long = "R")]
    radius: Option<String>,
    /// Comma-separated P-function parameters in [1, 2]
    #[arg(long)]
    beta: Option<String>,
    /// Comma-separated continuation loads
    #[arg(long)]
    lambda: Option<String>,
    /// Comma-separated alpha values for the bounds table
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long = "alpha-max")]
    alpha_max: Option<String>,
    #[arg(long = "alpha-steps")]
    alpha_steps: Option<String>,
    /// Ball radii for the Lorentzian validity map
    #[arg(long = "validity-radii")]
    validity_radii: Option<String>,
    /// Radii `lo,hi` bracketing the Lorentzian existence boundary
    #[arg(long = "existence-bracket")]
    existence_bracket: Option<String>,
    /// Comma-separated grid spacings for sweep
    #[arg(long)]
    ladder: Option<String>,
    /// Also solve at 2h for order estimates (true or false)
    #[arg(long = "order-study")]
    order_study: Option<String>,
    #[arg(long = "tol-bound")]
    tol_bound: Option<String>,
    #[arg(long = "tol-minimum-principle")]
    tol_minimum_principle: Option<String>,
    #[arg(long = "tol-gradient-ceiling")]
    tol_gradient_ceiling: Option<String>,
    #[arg(long = "tol-inequality")]
    tol_inequality: Option<String>,
    #[arg(long = "tol-constancy")]
    tol_constancy: Option<String>,
    #[arg(long = "tol-newton")]
    tol_newton: Option<String>,
    #[arg(long = "tol-shoot")]
    tol_shoot: Option<String>,
    #[arg(long = "out-dir")]
    out_dir: Option<String>,
}

impl Flags {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let pairs: [(&'static str, &Option<String>); 26] = [
            ("problem", &self.problem),
            ("g", &self.g),
            ("f", &self.f),
            ("n", &self.n),
            ("s_limit", &self.s_limit),
            ("domain", &self.domain),
            ("h", &self.h),
            ("h_r", &self.h_r),
            ("R", &self.radius),
            ("beta", &self.beta),
            ("lambda", &self.lambda),
            ("alpha", &self.alpha),
            ("alpha_max", &self.alpha_max),
            ("alpha_steps", &self.alpha_steps),
            ("validity_radii", &self.validity_radii),
            ("existence_bracket", &self.existence_bracket),
            ("ladder", &self.ladder),
            ("order_study", &self.order_study),
            ("tol_bound", &self.tol_bound),
            ("tol_minimum_principle", &self.tol_minimum_principle),
            ("tol_gradient_ceiling", &self.tol_gradient_ceiling),
            ("tol_inequality", &self.tol_inequality),
            ("tol_constancy", &self.tol_constancy),
            ("tol_newton", &self.tol_newton),
            ("tol_shoot", &self.tol_shoot),
            ("out_dir", &self.out_dir),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }
}

fn build_config(mode: Mode, flags: &Flags) -> Result<RunConfig, String> {
    let mut cfg = RunConfig::new(mode);
    if let Some(path) = &flags.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        cfg.apply_file(&text)
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    for (key, value) in flags.overrides() {
        cfg.set(key, value)
            .map_err(|e| format!("--{}: {e}", key.replace('_', "-")))?;
    }
    cfg.mode = mode;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                Status::ConfigError as u8
            } else {
                0
            });
        }
    };
    let (mode, flags) = match &cli.command {
        Command::Radial(f) => (Mode::Radial, f),
        Command::Solve2d(f) => (Mode::Solve2d, f),
        Command::Verify(f) => (Mode::Verify, f),
        Command::Bounds(f) => (Mode::Bounds, f),
        Command::Sweep(f) => (Mode::Sweep, f),
    };
    let status = match build_config(mode, flags) {
        Err(e) => {
            eprintln!("config error: {e}");
            Status::ConfigError
        }
        Ok(cfg) => match run::run(&cfg) {
            Ok(s) => s,
            Err(RunError::Config(e)) => {
                eprintln!("config error: {e}");
                Status::ConfigError
            }
            Err(RunError::Solver(e)) => {
                eprintln!("solver failure: {e}");
                Status::SolverFailure
            }
        },
    };
    ExitCode::from(status as u8)
}
