//! Exact quantum-jump trajectories of the dimer and their per-trajectory
//! observables.
//!
//! Each step applies the free propagator and then one of the four
//! back-actions, `|psi> -> M_r U |psi> / √N`, with `r` drawn from the Born
//! probabilities of `U |psi>`.

use rand::Rng;

use crate::error::{DimerError, Result};
use crate::gutzwiller::AngleState;
use crate::params::SimParams;
use crate::quantum::{
    bloch_angle, build_kraus, canonical_atan2, entanglement_entropy, norm_sqr, propagator,
    reduced_bloch, KrausSet, Operator4, PureState4, Site,
};
use crate::rng::trajectory_rng;

/// Smallest outcome probability that can still be renormalized.
pub const MIN_OUTCOME_PROBABILITY: f64 = 1e-15;

/// Measurement readout of one interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Readout {
    NoClick = 0,
    Left = 1,
    Right = 2,
    Bond = 3,
}

impl Readout {
    pub const ALL: [Readout; 4] = [Readout::NoClick, Readout::Left, Readout::Right, Readout::Bond];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(r: usize) -> Option<Self> {
        Self::ALL.get(r).copied()
    }
}

/// Final-time record of one trajectory.
///
/// `fidelity` is `None` when a reduced Bloch direction is degenerate and the
/// closest product state is undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub angles: AngleState,
    pub entropy: f64,
    pub fidelity: Option<f64>,
    pub readout_counts: [u64; 4],
}

fn select(p: &[f64; 4], u: f64) -> usize {
    let mut acc = 0.0;
    for (r, pr) in p.iter().enumerate().take(3) {
        acc += pr;
        if u < acc {
            return r;
        }
    }
    3
}

/// One step `M_r U |psi> / √N` with the readout chosen by inverse CDF over
/// `r = 0, 1, 2, 3` from the single uniform draw `u`.
pub fn jump_step(
    state: &PureState4,
    kraus: &KrausSet,
    u_op: &Operator4,
    u: f64,
) -> Result<(PureState4, Readout)> {
    state.check_normalized()?;
    step_unchecked(state, kraus, u_op, u)
}

#[inline]
fn step_unchecked(
    state: &PureState4,
    kraus: &KrausSet,
    u_op: &Operator4,
    u: f64,
) -> Result<(PureState4, Readout)> {
    let phi = u_op.apply(state.amplitudes());
    let mut p = kraus.probabilities_raw(&phi);
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    let r = select(&p, u);
    if p[r] < MIN_OUTCOME_PROBABILITY {
        return Err(DimerError::Numerical(format!(
            "readout {r} selected with probability {:e}",
            p[r]
        )));
    }
    let d = kraus.diagonal(r);
    let out = [phi[0] * d[0], phi[1] * d[1], phi[2] * d[2], phi[3] * d[3]];
    let inv = 1.0 / norm_sqr(&out).sqrt();
    Ok((
        PureState4::from_normalized(out.map(|a| a * inv)),
        Readout::from_index(r).expect("index < 4"),
    ))
}

/// Closest-product-state fidelity `|<θ_L, θ_R | psi>|²`, with the angles read
/// off the reduced Bloch vectors of each site.
pub fn gutzwiller_fidelity(state: &PureState4) -> Result<f64> {
    let tl = bloch_angle(&reduced_bloch(state, Site::Left))?;
    let tr = bloch_angle(&reduced_bloch(state, Site::Right))?;
    let overlap = PureState4::product(tl, tr).inner(state);
    Ok(overlap.norm_sqr().clamp(0.0, 1.0))
}

/// Angles, entropy and fidelity of an exact state.
pub fn sample_from_state(state: &PureState4, readout_counts: [u64; 4]) -> TrajectorySample {
    let angle = |site| {
        let b = reduced_bloch(state, site);
        canonical_atan2(b.y, b.z)
    };
    TrajectorySample {
        angles: AngleState {
            theta_l: angle(Site::Left),
            theta_r: angle(Site::Right),
        },
        entropy: entanglement_entropy(state),
        fidelity: gutzwiller_fidelity(state).ok(),
        readout_counts,
    }
}

/// Runs an exact trajectory from `|11>`, calling `observe(step, time, state)`
/// every `stride` steps (and once at `step = 0`). `stride = 0` disables the
/// hook.
pub fn run_exact_trajectory_observed<F>(
    params: &SimParams,
    traj_index: u64,
    stride: u64,
    mut observe: F,
) -> Result<TrajectorySample>
where
    F: FnMut(u64, f64, &PureState4),
{
    let dt = params.step_dt();
    let tag = |e: DimerError| DimerError::Trajectory {
        index: traj_index,
        source: Box::new(e),
    };
    let kraus = build_kraus(params.gamma1, params.gamma2, dt).map_err(tag)?;
    let u_op = propagator(params.omega_s, dt);
    let mut rng = trajectory_rng(params.master_seed, traj_index);
    let mut state = PureState4::basis(3);
    let mut counts = [0u64; 4];
    if stride > 0 {
        observe(0, 0.0, &state);
    }
    for step in 1..=params.n_steps() {
        let (next, r) = step_unchecked(&state, &kraus, &u_op, rng.random::<f64>()).map_err(tag)?;
        state = next;
        counts[r.index()] += 1;
        if stride > 0 && step % stride == 0 {
            observe(step, step as f64 * dt, &state);
        }
    }
    Ok(sample_from_state(&state, counts))
}

pub fn run_exact_trajectory(params: &SimParams, traj_index: u64) -> Result<TrajectorySample> {
    run_exact_trajectory_observed(params, traj_index, 0, |_, _, _| {})
}

/// Streaming mean/variance (Welford) with the parallel merge rule.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningMean {
    pub n: u64,
    mean: f64,
    m2: f64,
}

impl RunningMean {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningMean) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn mean(&self) -> Option<f64> {
        (self.n > 0).then_some(self.mean)
    }

    /// Standard error of the mean; zero for a single sample.
    pub fn std_error(&self) -> Option<f64> {
        match self.n {
            0 => None,
            1 => Some(0.0),
            n => Some((self.m2.max(0.0) / (n - 1) as f64 / n as f64).sqrt()),
        }
    }
}

/// Accumulator for `F̄`, `S̄_E` and readout totals over an ensemble.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnsembleStats {
    pub fidelity: RunningMean,
    pub entropy: RunningMean,
    pub excluded: u64,
    pub readout_totals: [u64; 4],
}

impl EnsembleStats {
    pub fn push(&mut self, s: &TrajectorySample) {
        match s.fidelity {
            Some(f) => self.fidelity.push(f),
            None => self.excluded += 1,
        }
        self.entropy.push(s.entropy);
        for (t, c) in self.readout_totals.iter_mut().zip(s.readout_counts) {
            *t += c;
        }
    }

    pub fn merge(&mut self, other: &EnsembleStats) {
        self.fidelity.merge(&other.fidelity);
        self.entropy.merge(&other.entropy);
        self.excluded += other.excluded;
        for (t, c) in self.readout_totals.iter_mut().zip(other.readout_totals) {
            *t += c;
        }
    }

    pub fn n_samples(&self) -> u64 {
        self.entropy.n
    }

    pub fn averages(&self) -> Result<EnsembleAverages> {
        if self.n_samples() == 0 {
            return Err(DimerError::Empty("no trajectory samples".into()));
        }
        Ok(EnsembleAverages {
            fidelity_mean: self.fidelity.mean(),
            fidelity_se: self.fidelity.std_error(),
            entropy_mean: self.entropy.mean().unwrap_or(0.0),
            entropy_se: self.entropy.std_error().unwrap_or(0.0),
            n_samples: self.n_samples(),
            n_excluded: self.excluded,
            readout_totals: self.readout_totals,
        })
    }
}

/// Ensemble means with standard errors of the mean. Fidelity statistics are
/// `None` when every sample had an undefined fidelity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleAverages {
    pub fidelity_mean: Option<f64>,
    pub fidelity_se: Option<f64>,
    pub entropy_mean: f64,
    pub entropy_se: f64,
    pub n_samples: u64,
    pub n_excluded: u64,
    pub readout_totals: [u64; 4],
}

pub fn ensemble_averages(samples: &[TrajectorySample]) -> Result<EnsembleAverages> {
    let mut stats = EnsembleStats::default();
    samples.iter().for_each(|s| stats.push(s));
    stats.averages()
}
