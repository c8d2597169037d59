//! Deterministic parallel drivers for trajectory ensembles.
//!
//! Trajectories are split into fixed-size chunks by index. Each chunk is
//! reduced sequentially and the partial results are folded in chunk order,
//! so the output does not depend on the number of worker threads.

use rayon::prelude::*;

use crate::error::{DimerError, Result};
use crate::gutzwiller::run_gw_batch;
use crate::histogram::{Backend, Histogram2D, HistogramMeta};
use crate::jump::{run_exact_trajectory, EnsembleStats, TrajectorySample};
use crate::params::SimParams;
use crate::sse::{run_sse_trajectory, SseParams};

/// Trajectories per work unit.
pub const CHUNK: u64 = 1024;

/// Aggregated output of an ensemble run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub histogram: Histogram2D,
    /// Histograms of the even- and odd-indexed trajectories.
    pub halves: [Histogram2D; 2],
    pub stats: EnsembleStats,
}

impl EnsembleResult {
    fn empty(n: usize, meta: HistogramMeta) -> Result<Self> {
        let h = Histogram2D::new(n, meta)?;
        Ok(Self {
            histogram: h.clone(),
            halves: [h.clone(), h],
            stats: EnsembleStats::default(),
        })
    }

    fn push(&mut self, index: u64, s: &TrajectorySample) {
        self.histogram.add(s.angles);
        self.halves[(index % 2) as usize].add(s.angles);
        self.stats.push(s);
    }

    fn merge(&mut self, other: &EnsembleResult) -> Result<()> {
        self.histogram.merge(&other.histogram)?;
        self.halves[0].merge(&other.halves[0])?;
        self.halves[1].merge(&other.halves[1])?;
        self.stats.merge(&other.stats);
        Ok(())
    }

    /// TV distance between the two halves.
    pub fn split_floor(&self) -> Result<f64> {
        crate::histogram::tv_distance(&self.halves[0], &self.halves[1])
    }
}

/// Runs trajectories `0..params.n_traj` through `runner` and bins the final
/// angles on an `n_bins × n_bins` grid.
pub fn run_ensemble_with<F>(params: &SimParams, backend: Backend, n_bins: usize, runner: F) -> Result<EnsembleResult>
where
    F: Fn(u64) -> Result<TrajectorySample> + Sync,
{
    run_chunked(params, backend, n_bins, |start, end| (start..end).map(&runner).collect())
}

/// As [`run_ensemble_with`], with `runner(start, end)` producing the samples
/// of trajectories `start..end` in index order.
pub fn run_chunked<F>(params: &SimParams, backend: Backend, n_bins: usize, runner: F) -> Result<EnsembleResult>
where
    F: Fn(u64, u64) -> Result<Vec<TrajectorySample>> + Sync,
{
    params.validate()?;
    let meta = HistogramMeta {
        backend,
        params: *params,
    };
    let n_chunks = params.n_traj.div_ceil(CHUNK);
    let partials: Vec<Result<EnsembleResult>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let mut part = EnsembleResult::empty(n_bins, meta)?;
            for (k, s) in runner(start, ((c + 1) * CHUNK).min(params.n_traj))?.iter().enumerate() {
                part.push(start + k as u64, s);
            }
            Ok(part)
        })
        .collect();
    let mut total = EnsembleResult::empty(n_bins, meta)?;
    for p in partials {
        total.merge(&p?)?;
    }
    Ok(total)
}

/// Runs a trajectory backend; the Fokker-Planck solver is not
/// trajectory-based and is rejected here.
pub fn run_ensemble(params: &SimParams, backend: Backend, n_bins: usize) -> Result<EnsembleResult> {
    match backend {
        Backend::Exact => run_ensemble_with(params, backend, n_bins, |i| run_exact_trajectory(params, i)),
        Backend::Gutzwiller => run_chunked(params, backend, n_bins, |a, b| Ok(run_gw_batch(params, a, b - a))),
        Backend::Sse => {
            let sse = SseParams::new(*params)?;
            run_ensemble_with(params, backend, n_bins, |i| run_sse_trajectory(&sse, i))
        }
        Backend::FokkerPlanck => Err(DimerError::InvalidParameter(
            "fokker-planck is a grid solver, not a trajectory backend".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gutzwiller::run_gw_trajectory;

    fn params(n: u64) -> SimParams {
        SimParams::from_lambdas(0.25, 0.25).with_time(1e-3, 1.0).with_trajectories(n, 3)
    }

    #[test]
    fn independent_of_thread_count() {
        let p = params(3000);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| run_ensemble(&p, Backend::Gutzwiller, 24)).unwrap();
        let b = four.install(|| run_ensemble(&p, Backend::Gutzwiller, 24)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.histogram.total(), 3000);
        assert_eq!(a.halves[0].total() + a.halves[1].total(), 3000);
    }

    #[test]
    fn matches_sequential_loop() {
        let p = params(1500);
        let r = run_ensemble(&p, Backend::Gutzwiller, 16).unwrap();
        let mut h = Histogram2D::new(16, r.histogram.meta).unwrap();
        for i in 0..1500 {
            h.add(run_gw_trajectory(&p, i).angles);
        }
        assert_eq!(h, r.histogram);
    }

    #[test]
    fn exact_backend_errors_are_tagged() {
        let p = params(10);
        assert!(run_ensemble(&p, Backend::Exact, 8).is_ok());
        assert!(run_ensemble(&p, Backend::FokkerPlanck, 8).is_err());
        let bad = run_ensemble_with(&p, Backend::Exact, 8, |i| {
            if i == 7 {
                Err(DimerError::Trajectory { index: i, source: Box::new(DimerError::Numerical("x".into())) })
            } else {
                run_exact_trajectory(&p, i)
            }
        });
        assert!(matches!(bad, Err(DimerError::Trajectory { index: 7, .. })));
    }
}
