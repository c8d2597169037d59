//! Quantum state diffusion: the same monitored dimer unravelled with Gaussian
//! increments instead of discrete clicks.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{DimerError, Result};
use crate::jump::{sample_from_state, TrajectorySample};
use crate::params::SimParams;
use crate::quantum::{norm_sqr, Amplitudes, PureState4};
use crate::rng::trajectory_rng;

/// Diagonals of `n_L`, `n_R` and `n_L n_R` in the `|00>,|01>,|10>,|11>` basis.
pub const SSE_OPERATORS: [[f64; 4]; 3] = [[0.0, 0.0, 1.0, 1.0], [0.0, 1.0, 0.0, 1.0], [0.0, 0.0, 0.0, 1.0]];

/// Norm below which a step is treated as collapsed.
pub const MIN_SSE_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SseParams {
    pub sim: SimParams,
}

impl SseParams {
    pub fn new(sim: SimParams) -> Result<Self> {
        sim.validate()?;
        Ok(Self { sim })
    }

    /// `γ₁, γ₁, γ₂` for the three monitored operators.
    pub fn rates(&self) -> [f64; 3] {
        [self.sim.gamma1, self.sim.gamma1, self.sim.gamma2]
    }
}

struct SseStepper {
    omega: f64,
    dt: f64,
    rates: [f64; 3],
    scale: [f64; 3],
}

impl SseStepper {
    fn new(params: &SseParams, dt: f64) -> Self {
        let rates = params.rates();
        Self {
            omega: params.sim.omega_s,
            dt,
            rates,
            scale: rates.map(|g| (g * dt).sqrt()),
        }
    }

    #[inline]
    fn step(&self, psi: &Amplitudes, noise: [f64; 3]) -> Result<Amplitudes> {
        let prob = psi.map(|a| a.norm_sqr());
        let mut out = [Complex64::new(0.0, 0.0); 4];
        let mi = Complex64::new(0.0, -self.omega * self.dt);
        for k in 0..4 {
            out[k] = psi[k] + mi * (psi[k ^ 2] + psi[k ^ 1]);
        }
        for (r, o) in SSE_OPERATORS.iter().enumerate() {
            let mean: f64 = o.iter().zip(&prob).map(|(x, p)| x * p).sum();
            let dw = self.scale[r] * noise[r];
            let damp = 0.5 * self.rates[r] * self.dt;
            for k in 0..4 {
                let d = o[k] - mean;
                out[k] += psi[k] * (dw * d - damp * d * d);
            }
        }
        let n2 = norm_sqr(&out);
        if !(n2.sqrt() >= MIN_SSE_NORM) {
            return Err(DimerError::Numerical(format!("SSE norm collapsed to {:e}", n2.sqrt())));
        }
        let inv = 1.0 / n2.sqrt();
        Ok(out.map(|a| a * inv))
    }
}

/// One Euler–Maruyama step of size `params.sim.dt` followed by
/// renormalization. `noise` holds three standard normal draws.
pub fn sse_step(state: &PureState4, params: &SseParams, noise: [f64; 3]) -> Result<PureState4> {
    state.check_normalized()?;
    let next = SseStepper::new(params, params.sim.dt).step(state.amplitudes(), noise)?;
    Ok(PureState4::from_normalized(next))
}

/// Runs an SSE trajectory from `|11>`, calling `observe(step, time, state)`
/// every `stride` steps (and at `step = 0`); `stride = 0` disables the hook.
pub fn run_sse_trajectory_observed<F>(
    params: &SseParams,
    traj_index: u64,
    stride: u64,
    mut observe: F,
) -> Result<TrajectorySample>
where
    F: FnMut(u64, f64, &PureState4),
{
    let dt = params.sim.step_dt();
    let stepper = SseStepper::new(params, dt);
    let mut rng = trajectory_rng(params.sim.master_seed, traj_index);
    let mut psi = *PureState4::basis(3).amplitudes();
    if stride > 0 {
        observe(0, 0.0, &PureState4::from_normalized(psi));
    }
    for step in 1..=params.sim.n_steps() {
        let noise = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        psi = stepper.step(&psi, noise).map_err(|e| DimerError::Trajectory {
            index: traj_index,
            source: Box::new(e),
        })?;
        if stride > 0 && step % stride == 0 {
            observe(step, step as f64 * dt, &PureState4::from_normalized(psi));
        }
    }
    Ok(sample_from_state(&PureState4::from_normalized(psi), [0; 4]))
}

pub fn run_sse_trajectory(params: &SseParams, traj_index: u64) -> Result<TrajectorySample> {
    run_sse_trajectory_observed(params, traj_index, 0, |_, _, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jump::{run_exact_trajectory_observed, RunningMean};
    use crate::quantum::{propagator, Operator4, Site};
    use std::f64::consts::PI;

    fn params(l1: f64, l2: f64) -> SseParams {
        SseParams::new(SimParams::from_lambdas(l1, l2)).unwrap()
    }

    #[test]
    fn noise_free_step_matches_propagator() {
        let p = params(0.0, 0.0);
        let psi = PureState4::product(0.4, -1.1);
        let next = sse_step(&psi, &p, [0.3, -1.0, 2.0]).unwrap();
        let exact = propagator(1.0, p.sim.dt).apply(psi.amplitudes());
        let err = next
            .amplitudes()
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 5.0 * p.sim.dt * p.sim.dt, "err = {err}");
    }

    #[test]
    fn pointer_state_feels_only_the_hamiltonian() {
        let p = params(1.0, 3.0);
        let psi = PureState4::basis(3);
        let a = sse_step(&psi, &p, [5.0, -4.0, 3.0]).unwrap();
        let b = sse_step(&psi, &p, [0.0, 0.0, 0.0]).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn step_preserves_norm() {
        let p = params(1.25, 0.25);
        let mut psi = PureState4::bell();
        let mut rng = trajectory_rng(9, 0);
        for _ in 0..10_000 {
            let noise = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
            psi = sse_step(&psi, &p, noise).unwrap();
            assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rabi_period_returns_to_pointer() {
        let sim = SimParams::default().with_time(1e-3, PI);
        let s = run_sse_trajectory(&SseParams::new(sim).unwrap(), 0).unwrap();
        assert!(s.angles.distance(&crate::gutzwiller::AngleState::pointer()) < 1e-3);
    }

    #[test]
    fn deterministic_per_seed() {
        let sim = SimParams::from_lambdas(0.5, 0.5).with_time(1e-3, 2.0).with_trajectories(1, 11);
        let p = SseParams::new(sim).unwrap();
        assert_eq!(run_sse_trajectory(&p, 3).unwrap(), run_sse_trajectory(&p, 3).unwrap());
        assert_ne!(run_sse_trajectory(&p, 3).unwrap(), run_sse_trajectory(&p, 4).unwrap());
    }

    #[test]
    fn accumulated_increment_variance() {
        let p = params(0.5, 0.75);
        let rates = p.rates();
        let dt = p.sim.dt;
        let steps = 100_000;
        let mut rng = trajectory_rng(1, 2);
        let mut qv = [0.0; 3];
        for _ in 0..steps {
            for r in 0..3 {
                let z: f64 = rng.sample(StandardNormal);
                qv[r] += rates[r] * dt * z * z;
            }
        }
        for r in 0..3 {
            let expect = rates[r] * dt * steps as f64;
            assert!((qv[r] / expect - 1.0).abs() < 0.02, "channel {r}: {} vs {expect}", qv[r]);
        }
    }

    fn ensemble_n_l(l1: f64, l2: f64, checkpoints: &[u64], n_traj: u64, exact: bool) -> Vec<RunningMean> {
        let sim = SimParams::from_lambdas(l1, l2)
            .with_time(1e-3, *checkpoints.last().unwrap() as f64 * 1e-3)
            .with_trajectories(n_traj, 5);
        let n_l = Operator4::number(Site::Left);
        let mut acc = vec![RunningMean::default(); checkpoints.len()];
        let gcd = 250;
        for idx in 0..n_traj {
            let mut observe = |step: u64, _t: f64, psi: &PureState4| {
                if let Some(k) = checkpoints.iter().position(|&c| c == step) {
                    acc[k].push(n_l.expectation(psi).re);
                }
            };
            if exact {
                run_exact_trajectory_observed(&sim, idx, gcd, &mut observe).unwrap();
            } else {
                run_sse_trajectory_observed(&SseParams::new(sim).unwrap(), idx, gcd, &mut observe).unwrap();
            }
        }
        acc
    }

    #[test]
    fn agrees_with_jump_unraveling() {
        let checkpoints = [250, 500, 1000];
        let jump = ensemble_n_l(0.25, 0.25, &checkpoints, 10_000, true);
        let sse = ensemble_n_l(0.25, 0.25, &checkpoints, 10_000, false);
        for (a, b) in jump.iter().zip(&sse) {
            let se = (a.std_error().unwrap().powi(2) + b.std_error().unwrap().powi(2)).sqrt();
            let diff = (a.mean().unwrap() - b.mean().unwrap()).abs();
            assert!(diff < 4.0 * se, "diff {diff}, se {se}");
        }
    }
}
