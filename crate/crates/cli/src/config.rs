use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use zeno_dimer::flow::Axis;
use zeno_dimer::{Backend, SimParams};

use crate::CliError;

/// Environment variable naming the directory for outputs without `--out`.
pub const OUT_DIR_ENV: &str = "ZENO_DIMER_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "zeno-dimer",
    version,
    about = "Trajectory, master-equation and flow analyses of a monitored qubit dimer",
    long_about = "Trajectory, master-equation and flow analyses of a monitored qubit dimer.\n\n\
        Times are in units of 1/omega_s and rates in units of omega_s. Measurement strengths \
        can be given as lambda = gamma / (4 omega_s) or as rates gamma, not both."
)]
pub struct Cli {
    /// Worker threads [default: available parallelism]; affects wall time only
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// TOML file whose keys mirror the long flag names (e.g. t-final = 20); flags take precedence
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a trajectory ensemble or the Fokker-Planck solver and write a histogram CSV
    Simulate(SimulateArgs),
    /// Sample the no-click velocity field on a grid
    Flow(FlowArgs),
    /// Locate and classify the fixed points of the no-click flow
    FixedPoints(FixedPointArgs),
    /// Classify a grid of (lambda1, lambda2) points into regimes
    PhaseDiagram(PhaseArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendArg {
    Exact,
    Gutzwiller,
    Sse,
    FokkerPlanck,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Exact => Backend::Exact,
            BackendArg::Gutzwiller => Backend::Gutzwiller,
            BackendArg::Sse => Backend::Sse,
            BackendArg::FokkerPlanck => Backend::FokkerPlanck,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct StrengthArgs {
    /// Single-site strength lambda1 = gamma1 / (4 omega_s) [dimensionless, default 0]
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["gamma1", "gamma2"])]
    pub lambda1: Option<f64>,
    /// Bond strength lambda2 = gamma2 / (4 omega_s) [dimensionless, default 0]
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["gamma1", "gamma2"])]
    pub lambda2: Option<f64>,
    /// Single-site click rate gamma1 [units of omega_s, default 0]
    #[arg(long, allow_hyphen_values = true)]
    pub gamma1: Option<f64>,
    /// Bond click rate gamma2 [units of omega_s, default 0]
    #[arg(long, allow_hyphen_values = true)]
    pub gamma2: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Solver
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    #[command(flatten)]
    pub strength: StrengthArgs,
    /// Qubit frequency omega_s [sets the unit of time, default 1]
    #[arg(long, allow_hyphen_values = true)]
    pub omega_s: Option<f64>,
    /// Time step [units of 1/omega_s, default 1e-3]; requires omega_s*dt <= 1e-2
    #[arg(long, allow_hyphen_values = true)]
    pub dt: Option<f64>,
    /// Final time [units of 1/omega_s, default 20]
    #[arg(long, allow_hyphen_values = true)]
    pub t_final: Option<f64>,
    /// Number of trajectories [default 1000]
    #[arg(long)]
    pub n_traj: Option<u64>,
    /// Master seed of the per-trajectory random streams [default 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Histogram bins per angle axis [default 72]
    #[arg(long)]
    pub bins: Option<usize>,
    /// Fokker-Planck grid per axis, a multiple of --bins and at least 36 [default: --bins]
    #[arg(long)]
    pub fp_grid: Option<usize>,
    /// Fokker-Planck early stop on max cell change per unit time [density per unit time, default 1e-9]
    #[arg(long)]
    pub fp_tol: Option<f64>,
    /// Output histogram CSV [default: histogram.csv in $ZENO_DIMER_OUT_DIR or the working directory]
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Ensemble summary file [default: the output path with extension summary.toml]
    #[arg(long, value_name = "PATH")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FlowArgs {
    /// Single-site strength lambda1 [dimensionless, default 0]
    #[arg(long, allow_hyphen_values = true)]
    pub lambda1: Option<f64>,
    /// Bond strength lambda2 [dimensionless, default 0]
    #[arg(long, allow_hyphen_values = true)]
    pub lambda2: Option<f64>,
    /// Samples per angle axis, at least 8 [default 36]
    #[arg(long)]
    pub grid: Option<usize>,
    /// Output CSV [default: flow.csv in $ZENO_DIMER_OUT_DIR or the working directory]
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FixedPointArgs {
    /// Single-site strength lambda1 [dimensionless, default 0]
    #[arg(long, allow_hyphen_values = true)]
    pub lambda1: Option<f64>,
    /// Bond strength lambda2 [dimensionless, default 0]
    #[arg(long, allow_hyphen_values = true)]
    pub lambda2: Option<f64>,
    /// Seed-scan resolution per axis [default 144]
    #[arg(long)]
    pub scan: Option<usize>,
    /// Output CSV [default: fixed_points.csv in $ZENO_DIMER_OUT_DIR or the working directory]
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PhaseArgs {
    /// lambda1 axis as min:max:points [default 0:2:101]
    #[arg(long, value_name = "MIN:MAX:N")]
    pub l1: Option<String>,
    /// lambda2 axis as min:max:points [default 0:2:101]
    #[arg(long, value_name = "MIN:MAX:N")]
    pub l2: Option<String>,
    /// Output CSV [default: phase_diagram.csv in $ZENO_DIMER_OUT_DIR or the working directory]
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Contents of a `--config` file; any subset of the flags.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub threads: Option<usize>,
    pub backend: Option<BackendArg>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub omega_s: Option<f64>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub n_traj: Option<u64>,
    pub seed: Option<u64>,
    pub bins: Option<usize>,
    pub fp_grid: Option<usize>,
    pub fp_tol: Option<f64>,
    pub grid: Option<usize>,
    pub scan: Option<usize>,
    pub l1: Option<String>,
    pub l2: Option<String>,
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }
}

/// Fully resolved `simulate` settings.
#[derive(Debug, Clone)]
pub struct SimulateConfig {
    pub backend: Backend,
    pub params: SimParams,
    pub bins: usize,
    pub fp_grid: usize,
    pub fp_tol: f64,
    pub out: PathBuf,
    pub summary: PathBuf,
}

pub fn default_out(name: &str) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir).join(name),
        _ => PathBuf::from(name),
    }
}

fn lambda_or_rate(flags: &StrengthArgs, file: &FileConfig, omega_s: f64) -> Result<(f64, f64), CliError> {
    let from_lambda = |l1: Option<f64>, l2: Option<f64>| {
        (4.0 * omega_s * l1.unwrap_or(0.0), 4.0 * omega_s * l2.unwrap_or(0.0))
    };
    let flag_lambda = flags.lambda1.is_some() || flags.lambda2.is_some();
    let flag_gamma = flags.gamma1.is_some() || flags.gamma2.is_some();
    if flag_lambda {
        return Ok(from_lambda(flags.lambda1.or(file.lambda1), flags.lambda2.or(file.lambda2)));
    }
    if flag_gamma {
        return Ok((
            flags.gamma1.or(file.gamma1).unwrap_or(0.0),
            flags.gamma2.or(file.gamma2).unwrap_or(0.0),
        ));
    }
    let file_lambda = file.lambda1.is_some() || file.lambda2.is_some();
    let file_gamma = file.gamma1.is_some() || file.gamma2.is_some();
    match (file_lambda, file_gamma) {
        (true, true) => Err(CliError::Validation(
            "config sets both lambda and gamma; give measurement strengths one way".into(),
        )),
        (false, true) => Ok((file.gamma1.unwrap_or(0.0), file.gamma2.unwrap_or(0.0))),
        _ => Ok(from_lambda(file.lambda1, file.lambda2)),
    }
}

impl SimulateConfig {
    pub fn resolve(a: &SimulateArgs, file: &FileConfig) -> Result<Self, CliError> {
        let defaults = SimParams::default();
        let backend: Backend = a
            .backend
            .or(file.backend)
            .ok_or_else(|| CliError::Usage("simulate needs --backend (or `backend` in the config)".into()))?
            .into();
        let omega_s = a.omega_s.or(file.omega_s).unwrap_or(defaults.omega_s);
        let (gamma1, gamma2) = lambda_or_rate(&a.strength, file, omega_s)?;
        let params = SimParams {
            omega_s,
            gamma1,
            gamma2,
            dt: a.dt.or(file.dt).unwrap_or(defaults.dt),
            t_final: a.t_final.or(file.t_final).unwrap_or(defaults.t_final),
            n_traj: a.n_traj.or(file.n_traj).unwrap_or(defaults.n_traj),
            master_seed: a.seed.or(file.seed).unwrap_or(defaults.master_seed),
        };
        params.validate().map_err(|e| CliError::Validation(e.to_string()))?;
        let bins = a.bins.or(file.bins).unwrap_or(72);
        if bins == 0 {
            return Err(CliError::Validation("--bins must be at least 1".into()));
        }
        if backend != Backend::FokkerPlanck && params.n_traj == 0 {
            return Err(CliError::Validation("--n-traj must be at least 1".into()));
        }
        let fp_grid = a.fp_grid.or(file.fp_grid).unwrap_or(bins);
        let fp_tol = a.fp_tol.or(file.fp_tol).unwrap_or(1e-9);
        if backend == Backend::FokkerPlanck {
            if fp_grid < 36 || !fp_grid.is_multiple_of(bins) {
                return Err(CliError::Validation(format!(
                    "--fp-grid {fp_grid} must be at least 36 and a multiple of --bins {bins}"
                )));
            }
            if !(fp_tol > 0.0) {
                return Err(CliError::Validation("--fp-tol must be positive".into()));
            }
            if !(params.t_final > 0.0) {
                return Err(CliError::Validation("--t-final must be positive for fokker-planck".into()));
            }
        }
        let out = a.out.clone().or_else(|| file.out.clone()).unwrap_or_else(|| default_out("histogram.csv"));
        let summary = a
            .summary
            .clone()
            .or_else(|| file.summary.clone())
            .unwrap_or_else(|| out.with_extension("summary.toml"));
        Ok(Self {
            backend,
            params,
            bins,
            fp_grid,
            fp_tol,
            out,
            summary,
        })
    }
}

fn finite(x: f64, name: &str) -> Result<f64, CliError> {
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(CliError::Validation(format!("{name} must be finite and nonnegative, got {x}")))
    }
}

pub fn resolve_lambdas(l1: Option<f64>, l2: Option<f64>, file: &FileConfig) -> Result<(f64, f64), CliError> {
    Ok((
        finite(l1.or(file.lambda1).unwrap_or(0.0), "lambda1")?,
        finite(l2.or(file.lambda2).unwrap_or(0.0), "lambda2")?,
    ))
}

/// Parses `min:max:n`.
pub fn parse_axis(s: &str, name: &str) -> Result<Axis, CliError> {
    let bad = |why: &str| CliError::Validation(format!("--{name} {s:?}: {why}; expected MIN:MAX:N"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("wrong number of fields"));
    }
    let min: f64 = parts[0].trim().parse().map_err(|_| bad("bad MIN"))?;
    let max: f64 = parts[1].trim().parse().map_err(|_| bad("bad MAX"))?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad("bad N"))?;
    Axis::new(min, max, n).map_err(|e| bad(&e.to_string()))
}
