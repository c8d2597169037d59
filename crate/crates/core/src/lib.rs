//! Simulation of a monitored two-qubit dimer: exact quantum-jump
//! trajectories, the Gutzwiller product-state reduction, quantum state
//! diffusion, a Fokker-Planck solver for the angle PDF, and a fixed-point
//! analysis of the no-click flow.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod flow;
pub mod fokker_planck;
pub mod gutzwiller;
pub mod histogram;
pub mod io;
pub mod jump;
pub mod params;
pub mod quantum;
pub mod rng;
pub mod sse;

pub use ensemble::{run_chunked, run_ensemble, run_ensemble_with, EnsembleResult};
pub use error::{DimerError, Result};
pub use flow::{
    classify_phase, diagonal_root_condition, find_fixed_points, flow_field, locate_transition, phase_diagram,
    CellPhase, FixedPoint, FixedPointReport, FlowGrid, PhaseCell, PhaseLabel, Stability,
};
pub use fokker_planck::{fp_stationary, fp_step, FpStationary, PdfGrid, StopCriterion};
pub use gutzwiller::{drift, gw_readout_probs, gw_step, run_gw_batch, run_gw_trajectory, AngleState, DriftField};
pub use histogram::{
    bin_angles, conditional_cuts, marginal, occupied_fraction, product_of_marginals, tv_distance, Backend,
    Histogram2D, HistogramMeta, Marginal1D,
};
pub use jump::{
    ensemble_averages, jump_step, run_exact_trajectory, EnsembleAverages, EnsembleStats, Readout, TrajectorySample,
};
pub use params::SimParams;
pub use quantum::{
    born_probabilities, build_kraus, detector_kraus, entanglement_entropy, reduced_bloch, KrausSet, Operator4,
    PureState4, Site,
};
pub use sse::{run_sse_trajectory, sse_step, SseParams};
