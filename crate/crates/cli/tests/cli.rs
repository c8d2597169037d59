use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_zeno-dimer"));
    c.env_remove("ZENO_DIMER_OUT_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_lists_subcommands_and_flags() {
    let o = run(&["--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for word in ["simulate", "flow", "fixed-points", "phase-diagram", "--threads", "--config"] {
        assert!(text.contains(word), "missing {word}");
    }
    let o = run(&["simulate", "--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    for word in ["--backend", "--lambda1", "--gamma2", "--dt", "--t-final", "--n-traj", "--seed", "--bins", "--out"] {
        assert!(text.contains(word), "missing {word}");
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&run(&["bogus"])), 2);
    assert_eq!(code(&run(&["simulate", "--backend", "nope"])), 2);
    assert_eq!(code(&run(&["simulate", "--lambda1", "0.2", "--gamma1", "1"])), 2);
}

#[test]
fn coarse_dt_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.csv");
    let o = run(&["simulate", "--backend", "exact", "--dt", "1.0", "--out", path_str(&out)]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("dt"));
    assert!(!out.exists());
}

#[test]
fn missing_config_is_an_io_error() {
    assert_eq!(code(&run(&["--config", "/definitely/not/here.toml", "flow"])), 5);
}

#[test]
fn simulate_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (k, threads) in ["1", "3", "1"].iter().enumerate() {
        let out = dir.path().join(format!("h{k}.csv"));
        let o = run(&[
            "--threads", threads, "simulate", "--backend", "gutzwiller", "--lambda1", "0.25", "--lambda2", "0.25",
            "--t-final", "2", "--n-traj", "3000", "--seed", "11", "--bins", "24", "--out", path_str(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        files.push((std::fs::read(&out).unwrap(), std::fs::read(out.with_extension("summary.toml")).unwrap()));
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
    let text = String::from_utf8(files[0].0.clone()).unwrap();
    assert!(text.starts_with("# backend=gutzwiller\n"));
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 24 * 24);
}

#[test]
fn histogram_round_trips_through_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.csv");
    let o = run(&[
        "simulate", "--backend", "exact", "--lambda1", "0.25", "--lambda2", "0.25", "--t-final", "1", "--n-traj",
        "50", "--seed", "2", "--bins", "12", "--out", path_str(&out),
    ]);
    assert_eq!(code(&o), 0);
    let h = zeno_dimer::io::read_histogram(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(h.total(), 50);
    assert_eq!(h.n(), 12);
    assert_eq!(h.meta.backend, zeno_dimer::Backend::Exact);
}

#[test]
fn fokker_planck_writes_a_density_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fp.csv");
    let o = run(&[
        "simulate", "--backend", "fokker-planck", "--t-final", "2", "--bins", "36", "--fp-grid", "72", "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (g, meta) = zeno_dimer::io::read_density_grid(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(g.n, 36);
    assert_eq!(meta.backend, zeno_dimer::Backend::FokkerPlanck);
    assert!((g.mass() - 1.0).abs() < 1e-9);
    let bad = run(&["simulate", "--backend", "fokker-planck", "--bins", "72", "--fp-grid", "100"]);
    assert_eq!(code(&bad), 3);
}

#[test]
fn phase_diagram_labels_reference_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let o = run(&["phase-diagram", "--l1", "0.25:1.25:2", "--l2", "0.25:1.75:2", "--out", path_str(&out)]);
    assert_eq!(code(&o), 0);
    let cells = zeno_dimer::io::read_phase_grid(std::fs::File::open(&out).unwrap()).unwrap();
    let label = |a: f64, b: f64| {
        cells
            .iter()
            .find(|c| (c.lambda1 - a).abs() < 1e-12 && (c.lambda2 - b).abs() < 1e-12)
            .map(|c| c.phase.as_str())
            .unwrap()
    };
    assert_eq!(label(0.25, 0.25), "ergodic");
    assert_eq!(label(0.25, 1.75), "correlated_zeno");
    assert_eq!(label(1.25, 0.25), "standard_zeno");
}

#[test]
fn fixed_points_and_flow_files() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("fx.csv");
    assert_eq!(code(&run(&["fixed-points", "--lambda1", "0.25", "--lambda2", "1.75", "--out", path_str(&fx)])), 0);
    let points = zeno_dimer::io::read_fixed_points(std::fs::File::open(&fx).unwrap()).unwrap();
    assert!(std::fs::read_to_string(&fx).unwrap().starts_with("# lambda1=0.25\n# lambda2=1.75\n"));
    assert_eq!(points.len(), 2);
    let fl = dir.path().join("fl.csv");
    assert_eq!(code(&run(&["flow", "--lambda1", "0.25", "--lambda2", "1.75", "--grid", "10", "--out", path_str(&fl)])), 0);
    let text = std::fs::read_to_string(&fl).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 100);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "lambda1 = 1.25\nlambda2 = 0.25\nscan = 96\n").unwrap();
    let out = dir.path().join("fx.csv");
    let o = run(&["--config", path_str(&cfg), "fixed-points", "--out", path_str(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let points = zeno_dimer::io::read_fixed_points(std::fs::File::open(&out).unwrap()).unwrap();
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("# lambda1=1.25\n"));
    assert_eq!(points.len(), 4);
    let o = run(&["--config", path_str(&cfg), "fixed-points", "--lambda1", "0.25", "--lambda2", "0.25", "--out", path_str(&out)]);
    assert_eq!(code(&o), 0);
    let points = zeno_dimer::io::read_fixed_points(std::fs::File::open(&out).unwrap()).unwrap();
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("# lambda1=0.25\n"));
    assert!(points.is_empty());

    std::fs::write(&cfg, "no-such-key = 1\n").unwrap();
    assert_eq!(code(&run(&["--config", path_str(&cfg), "flow"])), 3);
    std::fs::write(&cfg, "backend = \"exact\"\nlambda1 = 0.5\ngamma1 = 2.0\n").unwrap();
    assert_eq!(code(&run(&["--config", path_str(&cfg), "simulate"])), 3);
}

#[test]
fn out_dir_environment_variable() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .env("ZENO_DIMER_OUT_DIR", dir.path())
        .args(["fixed-points", "--lambda1", "0.25", "--lambda2", "1.75"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("fixed_points.csv").exists());
}
