use zeno_dimer::fokker_planck::fp_stationary;
use zeno_dimer::histogram::empty_regions;
use zeno_dimer::io::{open_file, read_density_grid, read_histogram, write_density_grid, write_file, write_histogram};
use zeno_dimer::*;

#[test]
fn ensemble_file_round_trip_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let p = SimParams::from_lambdas(1.25, 0.25).with_time(1e-3, 10.0).with_trajectories(4000, 21);
    let r = run_ensemble(&p, Backend::Gutzwiller, 36).unwrap();
    let path = dir.path().join("h.csv");
    write_file(&path, |w| write_histogram(w, &r.histogram)).unwrap();
    let back = read_histogram(open_file(&path).unwrap()).unwrap();
    assert_eq!(back, r.histogram);

    // Standard Zeno: both marginals have wide empty bands.
    for site in [Site::Left, Site::Right] {
        assert!(marginal(&back, site).unwrap().longest_empty_run() >= 5);
    }
    assert!(occupied_fraction(&back, None) < 0.7);
    assert!(!empty_regions(&back).is_empty());
}

#[test]
fn density_grid_round_trip_keeps_diagonal_mass() {
    let dir = tempfile::tempdir().unwrap();
    let p = SimParams::from_lambdas(0.25, 0.25);
    let s = fp_stationary(&p, 36, 3.0, 1e-12).unwrap();
    let meta = HistogramMeta {
        backend: Backend::FokkerPlanck,
        params: p,
    };
    let path = dir.path().join("fp.csv");
    write_file(&path, |w| write_density_grid(w, &s.grid, &meta)).unwrap();
    let (back, m) = read_density_grid(open_file(&path).unwrap()).unwrap();
    assert_eq!(m, meta);
    assert!((back.mass() - 1.0).abs() < 1e-12);
    assert!(tv_distance(&back, &s.grid).unwrap() < 1e-14);
}

#[test]
fn fokker_planck_matches_monte_carlo_within_sampling_noise() {
    let p = SimParams::from_lambdas(0.25, 0.25).with_trajectories(20_000, 4);
    let mc = run_ensemble(&p, Backend::Gutzwiller, 24).unwrap();
    let fp = fp_stationary(&p, 72, p.t_final, 1e-12).unwrap();
    let tv = tv_distance(&fp.grid.coarsen(3).unwrap(), &mc.histogram).unwrap();
    let floor = mc.split_floor().unwrap();
    assert!(tv < floor, "tv {tv}, floor {floor}");
}

#[test]
fn backends_agree_on_local_occupation_decay() {
    // Exact jumps, the angle map and diffusion unravel the same Lindblad
    // average; at weak coupling and short times the click totals also agree
    // between the exact and Gutzwiller backends.
    let p = SimParams::from_lambdas(0.25, 0.0).with_time(1e-3, 2.0).with_trajectories(3000, 8);
    let ex = run_ensemble(&p, Backend::Exact, 12).unwrap().stats.averages().unwrap();
    let gw = run_ensemble(&p, Backend::Gutzwiller, 12).unwrap().stats.averages().unwrap();
    let clicks = |a: &EnsembleAverages| (a.readout_totals[1] + a.readout_totals[2]) as f64;
    let (a, b) = (clicks(&ex), clicks(&gw));
    assert!((a - b).abs() < 5.0 * (a + b).sqrt(), "{a} vs {b}");
    assert_eq!(ex.readout_totals[3], 0);
}
