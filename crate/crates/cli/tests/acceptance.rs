//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! The Gutzwiller ensembles default to 10^6 trajectories per point and take
//! several minutes each; `ZENO_DIMER_GW_TRAJ` overrides the count for quick
//! local runs.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zeno_dimer::histogram::{bin_index, empty_regions};
use zeno_dimer::quantum::{coupling_for_rate, Operator4};
use zeno_dimer::*;

const BINS: usize = 72;

struct Report {
    results: Vec<bool>,
}

impl Report {
    fn record(&mut self, name: &str, pass: bool, detail: String, started: Instant) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag}  {name}: {detail} [{:.1} s]", started.elapsed().as_secs_f64());
        self.results.push(pass);
    }
}

fn gw_trajectories() -> u64 {
    std::env::var("ZENO_DIMER_GW_TRAJ")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(1_000_000)
}

fn povm_completeness(r: &mut Report) {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for a in 0..10 {
        for b in 0..10 {
            for dt in [1e-4, 1e-3, 1e-2] {
                let (g1, g2) = (0.2 * a as f64, 0.2 * b as f64);
                let k = build_kraus(g1, g2, dt).unwrap();
                worst = worst.max(k.completeness().max_abs_diff(&Operator4::identity()));
                let d = detector_kraus(coupling_for_rate(g1, dt), coupling_for_rate(g2, dt), dt);
                worst = worst.max(d.completeness().max_abs_diff(&Operator4::identity()));
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    r.record(
        "POVM completeness",
        worst <= 1e-12 && secs < 1.0,
        format!("max |sum M^dag M - I| = {worst:.2e} over 300 Kraus sets and 300 detector sets"),
        t,
    );
}

fn detector_convergence(r: &mut Report) {
    let t = Instant::now();
    let (g1, g2) = (2.0, 1.5);
    let err = |dt: f64| {
        let det = detector_kraus(coupling_for_rate(g1, dt), coupling_for_rate(g2, dt), dt);
        det.get(1, 0, 0).max_abs_diff(build_kraus(g1, g2, dt).unwrap().op(1))
    };
    let errs: Vec<f64> = [1e-3, 5e-4, 2.5e-4, 1.25e-4].iter().map(|&dt| err(dt)).collect();
    let order = errs.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
    let probs = |dt: f64| {
        detector_kraus(coupling_for_rate(1.0, dt), coupling_for_rate(1.0, dt), dt).probabilities(&PureState4::basis(3))
    };
    let (a, b) = (probs(1e-3), probs(5e-4));
    let ratios: Vec<f64> = [6, 5, 3].iter().map(|&k| a[k] / b[k]).collect();
    let doubles_ok = ratios.iter().all(|x| (x - 4.0).abs() <= 0.4);
    let secs = t.elapsed().as_secs_f64();
    r.record(
        "Detector-model convergence",
        order >= 1.0 && doubles_ok && secs < 1.0,
        format!("min measured order {order:.3}; double-click ratios under halving {ratios:.3?}"),
        t,
    );
}

fn gutzwiller_born(r: &mut Report) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (tl, tr) = (rng.random_range(-PI..PI), rng.random_range(-PI..PI));
        let (g1, g2) = (rng.random_range(0.0..5.0), rng.random_range(0.0..5.0));
        let dt = 1e-3;
        let gw = gw_readout_probs(AngleState::new(tl, tr), g1, g2, dt).unwrap();
        let born = born_probabilities(&PureState4::product(tl, tr), &build_kraus(g1, g2, dt).unwrap()).unwrap();
        for k in 0..4 {
            worst = worst.max((gw[k] - born[k]).abs());
        }
    }
    r.record(
        "Gutzwiller-Born identity",
        worst <= 1e-12,
        format!("max |p_gw - p_born| = {worst:.2e} over 1000 random states and rates"),
        t,
    );
}

fn fixed_point_regimes(r: &mut Report) {
    let t = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    let mut worst: f64 = 0.0;
    for (l1, l2, want) in [(0.25, 0.25, 0), (0.25, 1.75, 2), (1.25, 0.25, 4)] {
        let pts = find_fixed_points(l1, l2).points;
        for p in &pts {
            let d = drift(p.theta, l1, l2, 1.0);
            worst = worst.max(d.omega_l.abs().max(d.omega_r.abs()));
        }
        let has = |s: Stability| pts.iter().any(|p| p.class == s);
        ok &= pts.len() == want;
        ok &= match want {
            2 => has(Stability::Unstable) && has(Stability::Saddle),
            4 => has(Stability::Stable),
            _ => true,
        };
        let classes: Vec<&str> = pts.iter().map(|p| p.class.as_str()).collect();
        parts.push(format!("({l1}, {l2}) -> {} [{}]", pts.len(), classes.join(" ")));
    }
    let secs = t.elapsed().as_secs_f64();
    r.record(
        "Fixed-point regimes",
        ok && worst <= 1e-10 && secs < 5.0,
        format!("{}; max residual {worst:.1e}", parts.join(", ")),
        t,
    );
}

fn phase_boundaries(r: &mut Report) {
    let t = Instant::now();
    let (zeno, _) = locate_transition((0.5, 0.0), (1.5, 0.0), 1e-5).unwrap();
    let (_, corr) = locate_transition((0.0, 1.0), (0.0, 2.0), 1e-5).unwrap();
    let corr_oracle = 8.0 / (3.0 * 3f64.sqrt());
    let secs = t.elapsed().as_secs_f64();
    r.record(
        "Analytic phase boundaries",
        (zeno - 1.0).abs() <= 1e-3 && (corr - corr_oracle).abs() <= 1e-3 && secs < 10.0,
        format!("lambda1* = {zeno:.5} (oracle 1), lambda2* = {corr:.5} (oracle {corr_oracle:.5})"),
        t,
    );
}

struct GwPoint {
    lambdas: (f64, f64),
    result: EnsembleResult,
    secs: f64,
}

fn gw_point(l1: f64, l2: f64, n: u64) -> GwPoint {
    let t = Instant::now();
    let p = SimParams::from_lambdas(l1, l2).with_trajectories(n, 7);
    let result = run_ensemble(&p, Backend::Gutzwiller, BINS).unwrap();
    GwPoint {
        lambdas: (l1, l2),
        result,
        secs: t.elapsed().as_secs_f64(),
    }
}

fn min_marginals(h: &Histogram2D) -> (f64, f64, usize, usize) {
    let l = marginal(h, Site::Left).unwrap();
    let r = marginal(h, Site::Right).unwrap();
    let min = |m: &Marginal1D| m.densities.iter().cloned().fold(f64::INFINITY, f64::min);
    (min(&l), min(&r), l.longest_empty_run(), r.longest_empty_run())
}

fn regime_topology(r: &mut Report, pts: &[GwPoint]) {
    let t = Instant::now();
    let n = pts[0].result.histogram.total();

    let h = &pts[0].result.histogram;
    let occ = occupied_fraction(h, None);
    let (ml, mr, _, _) = min_marginals(h);
    let a = occ >= 0.95 && ml > 0.0 && mr > 0.0;

    let h = &pts[1].result.histogram;
    let k0 = bin_index(-2.5, BINS);
    let in_block = |c: usize| {
        let (i, j) = (c / BINS, c % BINS);
        i.abs_diff(k0) <= 4 && j.abs_diff(k0) <= 4
    };
    let hit = empty_regions(h)
        .iter()
        .filter(|reg| reg.iter().any(|&c| in_block(c)))
        .map(Vec::len)
        .max()
        .unwrap_or(0);
    let (bl, br, _, _) = min_marginals(h);
    let b = hit >= 81 && bl > 0.0 && br > 0.0;

    let h = &pts[2].result.histogram;
    let (_, _, rl, rr) = min_marginals(h);
    let c = rl.max(rr) >= 5;

    let secs: f64 = pts.iter().map(|p| p.secs).sum();
    r.record(
        "Regime topology",
        a && b && c,
        format!(
            "{n} trajectories per point ({secs:.0} s of sampling); (a) occupied {occ:.4}, marginal minima {ml:.3e}/{mr:.3e}; \
             (b) empty region of {hit} bins at the -2.5 rad block, marginal minima {bl:.3e}/{br:.3e}; \
             (c) longest empty marginal runs {rl}/{rr}"
        ),
        t,
    );
}

fn exchange_symmetry(r: &mut Report, pts: &[GwPoint]) {
    let t = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for p in pts {
        let h = &p.result.histogram;
        let tv = tv_distance(h, &h.transposed()).unwrap();
        let floor = p.result.split_floor().unwrap();
        ok &= tv <= 2.0 * floor;
        parts.push(format!("{:?}: TV {tv:.4} vs floor {floor:.4}", p.lambdas));
    }
    r.record("Exchange symmetry", ok, parts.join("; "), t);
}

fn local_monitoring_oracle(r: &mut Report) {
    let t = Instant::now();
    // The no-click operator is a tensor product only to first order in dt;
    // dt = 5e-5 keeps the accumulated entropy far below the bound.
    let p = SimParams::from_lambdas(0.25, 0.0).with_time(5e-5, 20.0).with_trajectories(4000, 11);
    let res = run_ensemble(&p, Backend::Exact, 24).unwrap();
    let s = res.stats.averages().unwrap().entropy_mean;
    let h = &res.histogram;
    let tv = tv_distance(h, &product_of_marginals(h).unwrap()).unwrap();
    let floor = res.split_floor().unwrap();
    r.record(
        "Local-monitoring oracle (lambda2 = 0)",
        s <= 1e-8 && tv <= 2.0 * floor,
        format!("mean S_E = {s:.2e}; TV(joint, product) {tv:.4} vs floor {floor:.4} (4000 exact trajectories, dt 5e-5, 24 bins)"),
        t,
    );
}

fn cross_solver(r: &mut Report, gw: &GwPoint) {
    let t = Instant::now();
    let p = SimParams::from_lambdas(0.25, 0.25);
    let fp = fokker_planck::fp_stationary(&p, 2 * BINS, 200.0, 1e-7).unwrap();
    let grid = fp.grid.coarsen(2).unwrap();
    let tv = tv_distance(&grid, &gw.result.histogram).unwrap();
    r.record(
        "Cross-solver validation",
        tv <= 0.1 && fp.max_mass_error <= 1e-6,
        format!(
            "TV {tv:.4} (MC split floor {:.4}); max mass error {:.1e}; {:?} at t = {:.1} on a 144 grid",
            gw.result.split_floor().unwrap(),
            fp.max_mass_error,
            fp.criterion,
            fp.grid.time
        ),
        t,
    );
}

fn exact_trend(r: &mut Report) {
    let t = Instant::now();
    let run = |l1: f64, l2: f64| {
        let p = SimParams::from_lambdas(l1, l2).with_trajectories(4000, 5);
        run_ensemble(&p, Backend::Exact, BINS).unwrap().stats.averages().unwrap()
    };
    let zeno = run(1.25, 0.25);
    let corr = run(0.25, 1.75);
    let (fz, fc) = (zeno.fidelity_mean.unwrap_or(f64::NAN), corr.fidelity_mean.unwrap_or(f64::NAN));
    r.record(
        "Exact-vs-Gutzwiller trend",
        fz > fc && corr.entropy_mean > zeno.entropy_mean,
        format!(
            "F (1.25, 0.25) = {fz:.5} > F (0.25, 1.75) = {fc:.5}; S_E (0.25, 1.75) = {:.5} > S_E (1.25, 0.25) = {:.5} (4000 trajectories each)",
            corr.entropy_mean, zeno.entropy_mean
        ),
        t,
    );
}

fn sse_contrast(r: &mut Report) {
    let t = Instant::now();
    let p = SimParams::from_lambdas(1.25, 0.25).with_trajectories(100_000, 9);
    let sse = run_ensemble(&p, Backend::Sse, BINS).unwrap();
    let occ = occupied_fraction(&sse.histogram, None);
    let jump = run_ensemble(&p.with_trajectories(10_000, 9), Backend::Exact, BINS).unwrap();
    let (_, _, rl, rr) = min_marginals(&jump.histogram);
    let (_, _, sl, sr) = min_marginals(&sse.histogram);
    r.record(
        "SSE contrast",
        occ >= 0.99 && rl.max(rr) >= 5,
        format!(
            "SSE occupied {occ:.4}, longest empty marginal runs {sl}/{sr}; jump backend runs {rl}/{rr}, occupied {:.4}",
            occupied_fraction(&jump.histogram, None)
        ),
        t,
    );
}

fn determinism(r: &mut Report) {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 7] = [
        &["simulate", "--backend", "gutzwiller", "--lambda1", "0.25", "--lambda2", "0.25", "--n-traj", "20000", "--seed", "7"],
        &["simulate", "--backend", "exact", "--lambda1", "0.25", "--lambda2", "1.75", "--n-traj", "300", "--seed", "3"],
        &["simulate", "--backend", "sse", "--lambda1", "1.25", "--lambda2", "0.25", "--t-final", "5", "--n-traj", "300"],
        &["simulate", "--backend", "fokker-planck", "--lambda1", "0.25", "--lambda2", "0.25", "--t-final", "5"],
        &["flow", "--lambda1", "0.25", "--lambda2", "1.75"],
        &["fixed-points", "--lambda1", "1.25", "--lambda2", "0.25"],
        &["phase-diagram", "--l1", "0:2:21", "--l2", "0:2:21"],
    ];
    let mut ok = true;
    let mut compared = 0;
    for (k, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for (rep, threads) in ["1", "4", "1"].iter().enumerate() {
            let out = dir.path().join(format!("run{k}_{rep}.csv"));
            let status = Command::new(env!("CARGO_BIN_EXE_zeno-dimer"))
                .args(["--threads", threads])
                .args(*args)
                .args(["--out", out.to_str().unwrap()])
                .output()
                .unwrap();
            ok &= status.status.success();
            let mut bytes = std::fs::read(&out).unwrap_or_default();
            if let Ok(summary) = std::fs::read(out.with_extension("summary.toml")) {
                bytes.extend(summary);
            }
            outputs.push(bytes);
        }
        ok &= !outputs[0].is_empty() && outputs.iter().all(|o| *o == outputs[0]);
        compared += 1;
    }
    r.record(
        "Determinism",
        ok,
        format!("{compared} CLI runs repeated with 1, 4 and 1 threads; outputs byte-identical: {ok}"),
        t,
    );
}

fn main() -> ExitCode {
    let mut r = Report { results: Vec::new() };
    povm_completeness(&mut r);
    detector_convergence(&mut r);
    gutzwiller_born(&mut r);
    fixed_point_regimes(&mut r);
    phase_boundaries(&mut r);
    let n = gw_trajectories();
    let pts: Vec<GwPoint> = [(0.25, 0.25), (0.25, 1.75), (1.25, 0.25)]
        .iter()
        .map(|&(a, b)| gw_point(a, b, n))
        .collect();
    regime_topology(&mut r, &pts);
    exchange_symmetry(&mut r, &pts);
    local_monitoring_oracle(&mut r);
    cross_solver(&mut r, &pts[0]);
    exact_trend(&mut r);
    sse_contrast(&mut r);
    determinism(&mut r);
    let failed = r.results.iter().filter(|&&p| !p).count();
    println!("acceptance: {} of {} criteria passed", r.results.len() - failed, r.results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
