#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use zeno_dimer::flow::{find_fixed_points_with, phase_diagram_axes, DEFAULT_SCAN};
use zeno_dimer::fokker_planck::fp_stationary;
use zeno_dimer::io::{
    write_density_grid, write_ensemble_summary, write_file, write_fixed_points, write_flow_field, write_histogram,
    write_phase_grid,
};
use zeno_dimer::{flow_field, run_ensemble, Backend, DimerError, HistogramMeta};

use crate::config::{default_out, parse_axis, resolve_lambdas, Cli, Command, FileConfig, SimulateConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Validation(String),
    Runtime(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Runtime(_) => 4,
            CliError::Io(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Runtime(m) | CliError::Io(m) => m,
        }
    }
}

impl From<DimerError> for CliError {
    fn from(e: DimerError) -> Self {
        match e {
            DimerError::InvalidParameter(_) => CliError::Validation(e.to_string()),
            DimerError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn write_out<F>(path: &Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut std::io::BufWriter<std::fs::File>) -> zeno_dimer::Result<()>,
{
    write_file(path, f).map_err(|e| match e {
        DimerError::Io(m) => CliError::Io(m),
        other => other.into(),
    })
}

fn simulate(cfg: &SimulateConfig) -> Result<String, CliError> {
    let start = Instant::now();
    let p = &cfg.params;
    let meta = HistogramMeta {
        backend: cfg.backend,
        params: *p,
    };
    if cfg.backend == Backend::FokkerPlanck {
        let sol = fp_stationary(p, cfg.fp_grid, p.t_final, cfg.fp_tol)?;
        let grid = sol.grid.coarsen(cfg.fp_grid / cfg.bins)?;
        write_out(&cfg.out, |w| write_density_grid(w, &grid, &meta))?;
        let secs = start.elapsed().as_secs_f64();
        return Ok(format!(
            "fokker-planck: {} steps to t = {:.6} ({:?}) in {secs:.2} s, {:.0} steps/s -> {}",
            sol.steps,
            sol.grid.time,
            sol.criterion,
            sol.steps as f64 / secs.max(1e-9),
            cfg.out.display()
        ));
    }
    let result = run_ensemble(p, cfg.backend, cfg.bins)?;
    let averages = result.stats.averages()?;
    write_out(&cfg.out, |w| write_histogram(w, &result.histogram))?;
    write_out(&cfg.summary, |w| write_ensemble_summary(w, cfg.backend, p, &averages))?;
    let secs = start.elapsed().as_secs_f64();
    Ok(format!(
        "{}: {} trajectories in {secs:.2} s, {:.0} trajectories/s -> {}",
        cfg.backend,
        p.n_traj,
        p.n_traj as f64 / secs.max(1e-9),
        cfg.out.display()
    ))
}

fn run(cli: Cli) -> Result<String, CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(n) = cli.threads.or(file.threads) {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate(args) => simulate(&SimulateConfig::resolve(&args, &file)?),
        Command::Flow(args) => {
            let start = Instant::now();
            let (l1, l2) = resolve_lambdas(args.lambda1, args.lambda2, &file)?;
            let n = args.grid.or(file.grid).unwrap_or(36);
            let out = args.out.or(file.out).unwrap_or_else(|| default_out("flow.csv"));
            let grid = flow_field(n, l1, l2)?;
            write_out(&out, |w| write_flow_field(w, &grid))?;
            Ok(format!(
                "flow: {} samples in {:.2} s -> {}",
                grid.samples.len(),
                start.elapsed().as_secs_f64(),
                out.display()
            ))
        }
        Command::FixedPoints(args) => {
            let start = Instant::now();
            let (l1, l2) = resolve_lambdas(args.lambda1, args.lambda2, &file)?;
            let scan = args.scan.or(file.scan).unwrap_or(DEFAULT_SCAN);
            if scan < 8 {
                return Err(CliError::Validation(format!("--scan must be at least 8, got {scan}")));
            }
            let out = args.out.or(file.out).unwrap_or_else(|| default_out("fixed_points.csv"));
            let report = find_fixed_points_with(l1, l2, scan);
            for d in &report.dropped {
                eprintln!("warning: {d}");
            }
            write_out(&out, |w| write_fixed_points(w, l1, l2, &report.points))?;
            let classes: Vec<&str> = report.points.iter().map(|p| p.class.as_str()).collect();
            Ok(format!(
                "fixed-points: {} found [{}] in {:.2} s -> {}",
                report.points.len(),
                classes.join(", "),
                start.elapsed().as_secs_f64(),
                out.display()
            ))
        }
        Command::PhaseDiagram(args) => {
            let start = Instant::now();
            let l1 = parse_axis(args.l1.or(file.l1).as_deref().unwrap_or("0:2:101"), "l1")?;
            let l2 = parse_axis(args.l2.or(file.l2).as_deref().unwrap_or("0:2:101"), "l2")?;
            let out = args.out.or(file.out).unwrap_or_else(|| default_out("phase_diagram.csv"));
            let cells = phase_diagram_axes(l1, l2);
            write_out(&out, |w| write_phase_grid(w, &cells))?;
            let secs = start.elapsed().as_secs_f64();
            Ok(format!(
                "phase-diagram: {} cells in {secs:.2} s, {:.0} cells/s -> {}",
                cells.len(),
                cells.len() as f64 / secs.max(1e-9),
                out.display()
            ))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
