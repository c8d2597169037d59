//! Fixed points and phases of the post-selected no-click flow
//! `θ̇ = -Ω(θ)` on the torus.
//!
//! Analysis is done at `ω_S = 1`; the flow topology depends on `(λ₁, λ₂)`
//! only. The phase rule is: no fixed points is ergodic, a stable fixed point
//! is standard Zeno, fixed points without a stable one is correlated Zeno.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{DimerError, Result};
use crate::gutzwiller::{drift, AngleState};
use crate::quantum::wrap_angle;

/// Default scan resolution for the fixed-point search.
pub const DEFAULT_SCAN: usize = 144;
/// Residual `max(|Ω_L|, |Ω_R|)` accepted as a zero of the flow.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Real parts below this magnitude classify a fixed point as marginal.
pub const MARGINAL_TOLERANCE: f64 = 1e-8;
const DEDUP_DISTANCE: f64 = 1e-6;
const NEWTON_MAX_ITER: usize = 100;
const NEWTON_DAMPING: f64 = 0.5;

/// Velocity `(-Ω_L, -Ω_R)` at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSample {
    pub theta: AngleState,
    pub velocity_l: f64,
    pub velocity_r: f64,
}

/// Flow sampled at the cell centers of an `n × n` periodic grid, row-major
/// with `θ_L` as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowGrid {
    pub n: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub samples: Vec<FlowSample>,
}

impl FlowGrid {
    pub fn at(&self, i: usize, j: usize) -> &FlowSample {
        &self.samples[i * self.n + j]
    }
}

pub fn cell_center(k: usize, n: usize) -> f64 {
    -PI + (k as f64 + 0.5) * 2.0 * PI / n as f64
}

pub fn flow_field(grid_n: usize, lambda1: f64, lambda2: f64) -> Result<FlowGrid> {
    if grid_n < 8 {
        return Err(DimerError::InvalidParameter(format!(
            "flow grid needs at least 8 cells per axis, got {grid_n}"
        )));
    }
    let samples = (0..grid_n * grid_n)
        .map(|k| {
            let theta = AngleState {
                theta_l: cell_center(k / grid_n, grid_n),
                theta_r: cell_center(k % grid_n, grid_n),
            };
            let d = drift(theta, lambda1, lambda2, 1.0);
            FlowSample {
                theta,
                velocity_l: -d.omega_l,
                velocity_r: -d.omega_r,
            }
        })
        .collect();
    Ok(FlowGrid {
        n: grid_n,
        lambda1,
        lambda2,
        samples,
    })
}

/// Jacobian `∂Ω/∂θ` at `ω_S = 1`, rows `(Ω_L, Ω_R)`, columns `(θ_L, θ_R)`.
pub fn drift_jacobian(theta: AngleState, lambda1: f64, lambda2: f64) -> [[f64; 2]; 2] {
    let (sl, cl) = theta.theta_l.sin_cos();
    let (sr, cr) = theta.theta_r.sin_cos();
    let hl = 0.5 * (1.0 - cl);
    let hr = 0.5 * (1.0 - cr);
    let cross = lambda2 * sl * sr;
    [
        [2.0 * (lambda1 + lambda2 * hr) * cl, cross],
        [cross, 2.0 * (lambda1 + lambda2 * hl) * cr],
    ]
}

/// Jacobian of the flow velocity `-Ω`.
pub fn flow_jacobian(theta: AngleState, lambda1: f64, lambda2: f64) -> [[f64; 2]; 2] {
    drift_jacobian(theta, lambda1, lambda2).map(|row| row.map(|x| -x))
}

fn eigenvalues(m: [[f64; 2]; 2]) -> (Complex64, Complex64) {
    let half_tr = 0.5 * (m[0][0] + m[1][1]);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = half_tr * half_tr - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (Complex64::new(half_tr + s, 0.0), Complex64::new(half_tr - s, 0.0))
    } else {
        let s = (-disc).sqrt();
        (Complex64::new(half_tr, s), Complex64::new(half_tr, -s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stability {
    Stable,
    Unstable,
    Saddle,
    Marginal,
}

impl Stability {
    pub fn from_eigenvalues(a: Complex64, b: Complex64) -> Self {
        if a.re.abs() < MARGINAL_TOLERANCE || b.re.abs() < MARGINAL_TOLERANCE {
            Stability::Marginal
        } else if a.re < 0.0 && b.re < 0.0 {
            Stability::Stable
        } else if a.re > 0.0 && b.re > 0.0 {
            Stability::Unstable
        } else {
            Stability::Saddle
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Saddle => "saddle",
            Stability::Marginal => "marginal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "stable" => Some(Stability::Stable),
            "unstable" => Some(Stability::Unstable),
            "saddle" => Some(Stability::Saddle),
            "marginal" => Some(Stability::Marginal),
            _ => None,
        }
    }
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A zero of the no-click flow with the eigenvalues of the flow Jacobian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub theta: AngleState,
    pub eig1: Complex64,
    pub eig2: Complex64,
    pub class: Stability,
}

impl FixedPoint {
    fn at(theta: AngleState, lambda1: f64, lambda2: f64) -> Self {
        let (eig1, eig2) = eigenvalues(flow_jacobian(theta, lambda1, lambda2));
        FixedPoint {
            theta,
            eig1,
            eig2,
            class: Stability::from_eigenvalues(eig1, eig2),
        }
    }

    pub fn on_diagonal(&self) -> bool {
        crate::quantum::angular_distance(self.theta.theta_l, self.theta.theta_r) < DEDUP_DISTANCE
    }
}

/// Result of a fixed-point search; `dropped` lists Newton candidates that
/// failed to converge.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FixedPointReport {
    pub points: Vec<FixedPoint>,
    pub dropped: Vec<String>,
}

fn residual(theta: AngleState, lambda1: f64, lambda2: f64) -> (f64, f64, f64) {
    let d = drift(theta, lambda1, lambda2, 1.0);
    (d.omega_l, d.omega_r, d.omega_l.abs().max(d.omega_r.abs()))
}

/// Damped Newton iteration on `Ω(θ) = 0`: full step first, halved until the
/// residual decreases.
fn newton(seed: AngleState, lambda1: f64, lambda2: f64) -> std::result::Result<AngleState, String> {
    let (mut l, mut r) = (seed.theta_l, seed.theta_r);
    let (mut fl, mut fr, mut res) = residual(seed, lambda1, lambda2);
    for _ in 0..NEWTON_MAX_ITER {
        if res <= RESIDUAL_TOLERANCE {
            return Ok(AngleState::new(l, r));
        }
        let j = drift_jacobian(AngleState { theta_l: l, theta_r: r }, lambda1, lambda2);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(format!("singular Jacobian near ({l:.6}, {r:.6})"));
        }
        let dl = (j[1][1] * fl - j[0][1] * fr) / det;
        let dr = (-j[1][0] * fl + j[0][0] * fr) / det;
        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha > 1e-6 {
            let cand = AngleState { theta_l: l - alpha * dl, theta_r: r - alpha * dr };
            let (cl, cr, cres) = residual(cand, lambda1, lambda2);
            if cres < res {
                l = cand.theta_l;
                r = cand.theta_r;
                (fl, fr, res) = (cl, cr, cres);
                accepted = true;
                break;
            }
            alpha *= NEWTON_DAMPING;
        }
        if !accepted {
            break;
        }
    }
    if res <= RESIDUAL_TOLERANCE {
        Ok(AngleState::new(l, r))
    } else {
        Err(format!(
            "Newton did not converge from ({:.6}, {:.6}); residual {res:e}",
            seed.theta_l, seed.theta_r
        ))
    }
}

pub fn find_fixed_points(lambda1: f64, lambda2: f64) -> FixedPointReport {
    find_fixed_points_with(lambda1, lambda2, DEFAULT_SCAN)
}

/// Grid scan at `scan_n × scan_n` nodes, seeding Newton from every cell in
/// which both drift components change sign, plus the diagonal roots.
pub fn find_fixed_points_with(lambda1: f64, lambda2: f64, scan_n: usize) -> FixedPointReport {
    let n = scan_n.max(8);
    let h = 2.0 * PI / n as f64;
    let node = |k: usize| -PI + (k % n) as f64 * h;
    let values: Vec<(f64, f64)> = (0..n * n)
        .map(|k| {
            let d = drift(AngleState { theta_l: node(k / n), theta_r: node(k % n) }, lambda1, lambda2, 1.0);
            (d.omega_l, d.omega_r)
        })
        .collect();
    let at = |i: usize, j: usize| values[(i % n) * n + (j % n)];
    let straddles = |xs: [f64; 4]| {
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        lo <= 0.0 && hi >= 0.0
    };

    let mut seeds = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let corners = [at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1)];
            if straddles(corners.map(|c| c.0)) && straddles(corners.map(|c| c.1)) {
                seeds.push(AngleState::new(node(i) + 0.5 * h, node(j) + 0.5 * h));
            }
        }
    }
    seeds.extend(
        diagonal_root_condition(lambda1, lambda2)
            .roots
            .into_iter()
            .map(|t| AngleState::new(t, t)),
    );

    let mut report = FixedPointReport::default();
    for seed in seeds {
        match newton(seed, lambda1, lambda2) {
            Ok(theta) => {
                if !report.points.iter().any(|p| p.theta.distance(&theta) < DEDUP_DISTANCE) {
                    report.points.push(FixedPoint::at(theta, lambda1, lambda2));
                }
            }
            Err(msg) => report.dropped.push(msg),
        }
    }
    report.points.sort_by(|a, b| {
        (a.theta.theta_l, a.theta.theta_r)
            .partial_cmp(&(b.theta.theta_l, b.theta.theta_r))
            .expect("finite angles")
    });
    report
}

/// Roots of `g(θ) = 1 + (λ₁ + λ₂ sin²(θ/2)) sin θ` on `(-π, π]`, i.e. the
/// fixed points on the diagonal `θ_L = θ_R`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalRoots {
    pub exists: bool,
    pub roots: Vec<f64>,
}

fn diag_g(theta: f64, lambda1: f64, lambda2: f64) -> f64 {
    let h = (0.5 * theta).sin().powi(2);
    1.0 + (lambda1 + lambda2 * h) * theta.sin()
}

fn diag_dg(theta: f64, lambda1: f64, lambda2: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    (lambda1 + lambda2 * 0.5 * (1.0 - c)) * c + 0.5 * lambda2 * s * s
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    while b - a > 1e-12 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Splits the circle at the critical points of `g`, so that `g` is monotone
/// on each arc, then brackets and bisects each sign change. A critical point
/// where `|g| ≤ 1e-12` is reported as a degenerate (tangent) root.
pub fn diagonal_root_condition(lambda1: f64, lambda2: f64) -> DiagonalRoots {
    const SCAN: usize = 4096;
    let g = |t: f64| diag_g(t, lambda1, lambda2);
    let dg = |t: f64| diag_dg(t, lambda1, lambda2);
    let h = 2.0 * PI / SCAN as f64;
    let node = |k: usize| -PI + k as f64 * h;

    let mut critical = Vec::new();
    for k in 0..SCAN {
        let (a, b) = (node(k), node(k + 1));
        let (da, db) = (dg(a), dg(b));
        if da == 0.0 {
            critical.push(a);
        } else if (da < 0.0) != (db < 0.0) && db != 0.0 {
            critical.push(bisect(dg, a, b));
        }
    }

    let mut roots: Vec<f64> = Vec::new();
    let push = |t: f64, roots: &mut Vec<f64>| {
        let t = wrap_angle(t);
        if !roots.iter().any(|&r| crate::quantum::angular_distance(r, t) < 1e-9) {
            roots.push(t);
        }
    };
    if critical.is_empty() {
        // g is constant (λ = 0) or has no turning points on the scan
        if g(0.0).abs() <= 1e-12 {
            push(0.0, &mut roots);
        }
    } else {
        for (k, &c) in critical.iter().enumerate() {
            let next = if k + 1 < critical.len() {
                critical[k + 1]
            } else {
                critical[0] + 2.0 * PI
            };
            let (gc, gn) = (g(c), g(next));
            if gc.abs() <= 1e-12 {
                push(c, &mut roots);
            } else if (gc < 0.0) != (gn < 0.0) && gn.abs() > 1e-12 {
                push(bisect(g, c, next), &mut roots);
            }
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    DiagonalRoots {
        exists: !roots.is_empty(),
        roots,
    }
}

/// Dynamical regime of the monitored dimer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseLabel {
    Ergodic,
    CorrelatedZeno,
    StandardZeno,
}

impl PhaseLabel {
    pub fn from_fixed_points(points: &[FixedPoint]) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| p.class == Stability::Marginal) {
            return Err(DimerError::BoundaryIndeterminate {
                theta_l: p.theta.theta_l,
                theta_r: p.theta.theta_r,
            });
        }
        Ok(if points.is_empty() {
            PhaseLabel::Ergodic
        } else if points.iter().any(|p| p.class == Stability::Stable) {
            PhaseLabel::StandardZeno
        } else {
            PhaseLabel::CorrelatedZeno
        })
    }
}

pub fn classify_phase(lambda1: f64, lambda2: f64) -> Result<PhaseLabel> {
    PhaseLabel::from_fixed_points(&find_fixed_points(lambda1, lambda2).points)
}

pub fn classify_phase_with(lambda1: f64, lambda2: f64, scan_n: usize) -> Result<PhaseLabel> {
    PhaseLabel::from_fixed_points(&find_fixed_points_with(lambda1, lambda2, scan_n).points)
}

/// Label of a phase-diagram node; `Boundary` marks marginal fixed points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellPhase {
    Ergodic,
    CorrelatedZeno,
    StandardZeno,
    Boundary,
}

impl CellPhase {
    pub fn as_str(self) -> &'static str {
        match self {
            CellPhase::Ergodic => "ergodic",
            CellPhase::CorrelatedZeno => "correlated_zeno",
            CellPhase::StandardZeno => "standard_zeno",
            CellPhase::Boundary => "boundary",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ergodic" => Some(CellPhase::Ergodic),
            "correlated_zeno" => Some(CellPhase::CorrelatedZeno),
            "standard_zeno" => Some(CellPhase::StandardZeno),
            "boundary" => Some(CellPhase::Boundary),
            _ => None,
        }
    }
}

impl From<PhaseLabel> for CellPhase {
    fn from(p: PhaseLabel) -> Self {
        match p {
            PhaseLabel::Ergodic => CellPhase::Ergodic,
            PhaseLabel::CorrelatedZeno => CellPhase::CorrelatedZeno,
            PhaseLabel::StandardZeno => CellPhase::StandardZeno,
        }
    }
}

impl fmt::Display for CellPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCell {
    pub lambda1: f64,
    pub lambda2: f64,
    pub n_fixed: usize,
    pub n_stable: usize,
    pub phase: CellPhase,
}

/// Evenly spaced samples `min, ..., max` (`n = 1` requires `min == max`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        let ok = n >= 1 && min.is_finite() && max.is_finite() && min >= 0.0 && max >= min && (n > 1 || min == max);
        if !ok {
            return Err(DimerError::InvalidParameter(format!(
                "bad axis {min}:{max}:{n}; need 0 <= min <= max, n >= 2 (or n = 1 with min = max)"
            )));
        }
        Ok(Self { min, max, n })
    }

    pub fn value(&self, k: usize) -> f64 {
        if self.n == 1 {
            self.min
        } else if k + 1 == self.n {
            self.max
        } else {
            self.min + (self.max - self.min) * k as f64 / (self.n - 1) as f64
        }
    }
}

pub fn classify_cell(lambda1: f64, lambda2: f64) -> PhaseCell {
    let points = find_fixed_points(lambda1, lambda2).points;
    let phase = match PhaseLabel::from_fixed_points(&points) {
        Ok(label) => label.into(),
        Err(_) => CellPhase::Boundary,
    };
    PhaseCell {
        lambda1,
        lambda2,
        n_fixed: points.len(),
        n_stable: points.iter().filter(|p| p.class == Stability::Stable).count(),
        phase,
    }
}

/// Classifies every node of the `l1 × l2` grid; rows are ordered with `λ₁`
/// as the slow index.
pub fn phase_diagram_axes(l1: Axis, l2: Axis) -> Vec<PhaseCell> {
    (0..l1.n * l2.n)
        .into_par_iter()
        .map(|k| classify_cell(l1.value(k / l2.n), l2.value(k % l2.n)))
        .collect()
}

pub fn phase_diagram(
    l1_min: f64,
    l1_max: f64,
    l2_min: f64,
    l2_max: f64,
    resolution: usize,
) -> Result<Vec<PhaseCell>> {
    if resolution < 2 {
        return Err(DimerError::InvalidParameter(format!(
            "phase diagram resolution must be at least 2, got {resolution}"
        )));
    }
    Ok(phase_diagram_axes(
        Axis::new(l1_min, l1_max, resolution)?,
        Axis::new(l2_min, l2_max, resolution)?,
    ))
}

/// Bisects the segment `from → to` in λ space for the point where the phase
/// first differs from the phase at `from`, to a parameter-space length `tol`.
/// Boundary-indeterminate nodes count as "different".
pub fn locate_transition(from: (f64, f64), to: (f64, f64), tol: f64) -> Result<(f64, f64)> {
    let label = |s: f64| {
        let p = (from.0 + s * (to.0 - from.0), from.1 + s * (to.1 - from.1));
        classify_phase(p.0, p.1).ok()
    };
    let start = label(0.0).ok_or_else(|| {
        DimerError::InvalidParameter("segment starts on a phase boundary".into())
    })?;
    if label(1.0) == Some(start) {
        return Err(DimerError::InvalidParameter(format!(
            "no transition between {from:?} and {to:?}"
        )));
    }
    let length = ((to.0 - from.0).powi(2) + (to.1 - from.1).powi(2)).sqrt();
    let (mut a, mut b) = (0.0, 1.0);
    while (b - a) * length > tol {
        let m = 0.5 * (a + b);
        if label(m) == Some(start) {
            a = m;
        } else {
            b = m;
        }
    }
    let s = 0.5 * (a + b);
    Ok((from.0 + s * (to.0 - from.0), from.1 + s * (to.1 - from.1)))
}
