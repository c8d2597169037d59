//! Stochastic Gutzwiller dynamics of the angle pair `(θ_L, θ_R)`.
//!
//! Between clicks the angles follow `θ̇ = -Ω(θ)` with
//! `Ω_L = 2ω_S [1 + (λ₁ + λ₂ sin²(θ_R/2)) sin θ_L]` and `Ω_R` obtained by
//! exchanging the arguments. Clicks project the measured site(s) onto `θ = π`.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{DimerError, Result};
use crate::jump::{Readout, TrajectorySample};
use crate::params::SimParams;
use crate::quantum::{canonical_atan2, wrap_angle};
use crate::rng::trajectory_rng;

/// Gutzwiller coordinates, both components in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleState {
    pub theta_l: f64,
    pub theta_r: f64,
}

impl AngleState {
    /// Wraps both components into `(-π, π]`.
    pub fn new(theta_l: f64, theta_r: f64) -> Self {
        Self {
            theta_l: wrap_angle(theta_l),
            theta_r: wrap_angle(theta_r),
        }
    }

    /// The pointer state `|11>`.
    pub fn pointer() -> Self {
        Self { theta_l: PI, theta_r: PI }
    }

    pub fn swapped(&self) -> Self {
        Self {
            theta_l: self.theta_r,
            theta_r: self.theta_l,
        }
    }

    /// Max of the per-component circular distances.
    pub fn distance(&self, other: &AngleState) -> f64 {
        crate::quantum::angular_distance(self.theta_l, other.theta_l)
            .max(crate::quantum::angular_distance(self.theta_r, other.theta_r))
    }
}

/// Angular velocities `(Ω_L, Ω_R)`; the angles move with `-Ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftField {
    pub omega_l: f64,
    pub omega_r: f64,
}

/// `Ω` written with rates: `Ω_L = 2ω_S + ½(γ₁ + γ₂ sin²(θ_R/2)) sin θ_L`.
/// Identical to the λ form for `ω_S > 0` and still defined at `ω_S = 0`.
#[inline]
pub fn drift_rates(theta: AngleState, gamma1: f64, gamma2: f64, omega_s: f64) -> DriftField {
    let (sl, cl) = theta.theta_l.sin_cos();
    let (sr, cr) = theta.theta_r.sin_cos();
    let half_l = 0.5 * (1.0 - cl);
    let half_r = 0.5 * (1.0 - cr);
    DriftField {
        omega_l: 2.0 * omega_s + 0.5 * (gamma1 + gamma2 * half_r) * sl,
        omega_r: 2.0 * omega_s + 0.5 * (gamma1 + gamma2 * half_l) * sr,
    }
}

pub fn drift(theta: AngleState, lambda1: f64, lambda2: f64, omega_s: f64) -> DriftField {
    let (sl, cl) = theta.theta_l.sin_cos();
    let (sr, cr) = theta.theta_r.sin_cos();
    let omega = |s: f64, partner_cos: f64| {
        2.0 * omega_s * (1.0 + (lambda1 + lambda2 * 0.5 * (1.0 - partner_cos)) * s)
    };
    DriftField {
        omega_l: omega(sl, cr),
        omega_r: omega(sr, cl),
    }
}

/// Readout probabilities on the product state at `theta`:
/// `p_1,2 = γ₁ dt sin²(θ_L,R / 2)`, `p_3 = γ₂ dt sin²(θ_L/2) sin²(θ_R/2)`.
pub fn gw_readout_probs(theta: AngleState, gamma1: f64, gamma2: f64, dt: f64) -> Result<[f64; 4]> {
    let sl = (0.5 * theta.theta_l).sin().powi(2);
    let sr = (0.5 * theta.theta_r).sin().powi(2);
    let p1 = gamma1 * dt * sl;
    let p2 = gamma1 * dt * sr;
    let p3 = gamma2 * dt * sl * sr;
    let p0 = 1.0 - (p1 + p2 + p3);
    if p0 < 0.0 {
        return Err(DimerError::InvalidParameter(format!(
            "no-click probability {p0} is negative; dt too large for the rates"
        )));
    }
    Ok([p0, p1, p2, p3])
}

/// Precomputed constants for the inner loop.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GwStepper {
    g1_dt: f64,
    g2_dt: f64,
    gamma1: f64,
    gamma2: f64,
    omega_s: f64,
    dt: f64,
}

impl GwStepper {
    pub(crate) fn new(params: &SimParams, dt: f64) -> Self {
        Self {
            g1_dt: params.gamma1 * dt,
            g2_dt: params.gamma2 * dt,
            gamma1: params.gamma1,
            gamma2: params.gamma2,
            omega_s: params.omega_s,
            dt,
        }
    }

    #[inline]
    pub(crate) fn step(&self, theta: AngleState, u: f64) -> (AngleState, Readout) {
        let (sl, cl) = theta.theta_l.sin_cos();
        let (sr, cr) = theta.theta_r.sin_cos();
        let hl = 0.5 * (1.0 - cl);
        let hr = 0.5 * (1.0 - cr);
        let p1 = self.g1_dt * hl;
        let p2 = self.g1_dt * hr;
        let p3 = self.g2_dt * hl * hr;
        let p0 = 1.0 - (p1 + p2 + p3);
        if u < p0 {
            let omega_l = 2.0 * self.omega_s + 0.5 * (self.gamma1 + self.gamma2 * hr) * sl;
            let omega_r = 2.0 * self.omega_s + 0.5 * (self.gamma1 + self.gamma2 * hl) * sr;
            let next = AngleState {
                theta_l: wrap_angle(theta.theta_l - omega_l * self.dt),
                theta_r: wrap_angle(theta.theta_r - omega_r * self.dt),
            };
            (next, Readout::NoClick)
        } else if u < p0 + p1 {
            (AngleState { theta_l: PI, ..theta }, Readout::Left)
        } else if u < p0 + p1 + p2 {
            (AngleState { theta_r: PI, ..theta }, Readout::Right)
        } else {
            (AngleState::pointer(), Readout::Bond)
        }
    }
}

/// One Euler step of the stochastic angle map with step `params.dt`; the
/// readout is chosen by inverse CDF over `r = 0, 1, 2, 3` using `u ∈ [0, 1)`.
pub fn gw_step(theta: AngleState, params: &SimParams, u: f64) -> (AngleState, Readout) {
    GwStepper::new(params, params.dt).step(theta, u)
}

/// Rotates the phasor `(sin θ, cos θ)` by `δ`, renormalizing to first order.
#[inline]
fn rotate(s: f64, c: f64, delta: f64) -> (f64, f64) {
    let (sd, cd) = if delta.abs() <= 0.01 {
        // truncation error below 2e-15 at the threshold
        let d2 = delta * delta;
        (
            delta * (1.0 - d2 * (1.0 / 6.0) * (1.0 - d2 * (1.0 / 20.0))),
            1.0 - d2 * 0.5 * (1.0 - d2 * (1.0 / 12.0) * (1.0 - d2 * (1.0 / 30.0))),
        )
    } else {
        delta.sin_cos()
    };
    let (s2, c2) = (s * cd + c * sd, c * cd - s * sd);
    let k = 1.5 - 0.5 * (s2 * s2 + c2 * c2);
    (s2 * k, c2 * k)
}

/// The map of [`GwStepper`] with each angle carried as `(sin θ, cos θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Phasors {
    sl: f64,
    cl: f64,
    sr: f64,
    cr: f64,
}

impl Phasors {
    const POINTER: Phasors = Phasors { sl: 0.0, cl: -1.0, sr: 0.0, cr: -1.0 };

    fn angles(&self) -> AngleState {
        AngleState {
            theta_l: canonical_atan2(self.sl, self.cl),
            theta_r: canonical_atan2(self.sr, self.cr),
        }
    }

    #[inline]
    fn step(self, g: &GwStepper, u: f64) -> (Phasors, Readout) {
        let hl = 0.5 * (1.0 - self.cl);
        let hr = 0.5 * (1.0 - self.cr);
        let p1 = g.g1_dt * hl;
        let p2 = g.g1_dt * hr;
        let p3 = g.g2_dt * hl * hr;
        let p0 = 1.0 - (p1 + p2 + p3);
        if u < p0 {
            let omega_l = 2.0 * g.omega_s + 0.5 * (g.gamma1 + g.gamma2 * hr) * self.sl;
            let omega_r = 2.0 * g.omega_s + 0.5 * (g.gamma1 + g.gamma2 * hl) * self.sr;
            let (sl, cl) = rotate(self.sl, self.cl, -omega_l * g.dt);
            let (sr, cr) = rotate(self.sr, self.cr, -omega_r * g.dt);
            (Phasors { sl, cl, sr, cr }, Readout::NoClick)
        } else if u < p0 + p1 {
            (Phasors { sl: 0.0, cl: -1.0, ..self }, Readout::Left)
        } else if u < p0 + p1 + p2 {
            (Phasors { sr: 0.0, cr: -1.0, ..self }, Readout::Right)
        } else {
            (Phasors::POINTER, Readout::Bond)
        }
    }
}

/// Runs one Gutzwiller trajectory from `(π, π)` to `t_final`.
///
/// Equivalent to iterating [`gw_step`] at the effective step, up to rounding;
/// angles are tracked as phasors so the loop avoids trigonometric calls.
pub fn run_gw_trajectory(params: &SimParams, traj_index: u64) -> TrajectorySample {
    let stepper = GwStepper::new(params, params.step_dt());
    let mut rng = trajectory_rng(params.master_seed, traj_index);
    let mut state = Phasors::POINTER;
    let mut counts = [0u64; 4];
    for _ in 0..params.n_steps() {
        let (next, r) = state.step(&stepper, rng.random::<f64>());
        state = next;
        counts[r.index()] += 1;
    }
    TrajectorySample {
        angles: state.angles(),
        entropy: 0.0,
        fidelity: Some(1.0),
        readout_counts: counts,
    }
}

/// Trajectories advanced in lock-step by [`run_gw_batch`].
const LANES: usize = 4;

/// Runs trajectories `first..first + count`; identical to calling
/// [`run_gw_trajectory`] on each index, but advances several trajectories in
/// lock-step so independent arithmetic chains overlap.
pub fn run_gw_batch(params: &SimParams, first: u64, count: u64) -> Vec<TrajectorySample> {
    let stepper = GwStepper::new(params, params.step_dt());
    let n_steps = params.n_steps();
    let mut out = Vec::with_capacity(count as usize);
    let mut start = first;
    let end = first + count;
    while end - start >= LANES as u64 {
        let mut rngs: [_; LANES] = std::array::from_fn(|k| trajectory_rng(params.master_seed, start + k as u64));
        let mut states = [Phasors::POINTER; LANES];
        let mut counts = [[0u64; 4]; LANES];
        for _ in 0..n_steps {
            for k in 0..LANES {
                let (next, r) = states[k].step(&stepper, rngs[k].random::<f64>());
                states[k] = next;
                counts[k][r.index()] += 1;
            }
        }
        for k in 0..LANES {
            out.push(TrajectorySample {
                angles: states[k].angles(),
                entropy: 0.0,
                fidelity: Some(1.0),
                readout_counts: counts[k],
            });
        }
        start += LANES as u64;
    }
    out.extend((start..end).map(|i| run_gw_trajectory(params, i)));
    out
}

/// Integrates the no-click flow `θ̇ = -Ω(θ)` from `theta0` for time `t` with
/// classical RK4 at a step no larger than `params.dt`.
pub fn meanfield_ode_check(theta0: AngleState, params: &SimParams, t: f64) -> AngleState {
    let n = ((t / params.dt).ceil() as u64).max(1);
    let h = t / n as f64;
    let f = |l: f64, r: f64| {
        let d = drift_rates(AngleState { theta_l: l, theta_r: r }, params.gamma1, params.gamma2, params.omega_s);
        (-d.omega_l, -d.omega_r)
    };
    let (mut l, mut r) = (theta0.theta_l, theta0.theta_r);
    for _ in 0..n {
        let k1 = f(l, r);
        let k2 = f(l + 0.5 * h * k1.0, r + 0.5 * h * k1.1);
        let k3 = f(l + 0.5 * h * k2.0, r + 0.5 * h * k2.1);
        let k4 = f(l + h * k3.0, r + h * k3.1);
        l += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        r += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    AngleState::new(l, r)
}
