//! Control synthesis. Auxiliary-system schedules are tracked in the
//! interaction picture by averaging, then mapped back by reparametrization.

pub mod averaging;
pub mod bounds;
pub mod control;
pub mod drift;
pub mod nu;
pub mod period;
pub mod sigma;
pub mod tracking;
pub mod transfer;

pub use averaging::{averaging_times, averaging_times_with, mean_phase};
pub use bounds::{edge_bound, l1_upper_bound};
pub use control::{PiecewiseConstantControl, Step};
pub use drift::phase_tune_drift;
pub use nu::{nu_constant, nu_limit};
pub use period::{period_tau, Ratio};
pub use sigma::{
    decompose_permutation, path_schedule, permutation_to_schedule, schedule_unitary, sigma_swap, steer_to_first,
    SigmaSchedule, SigmaStep,
};
pub use tracking::{track_schedule, SynthesisParams, TrackedControl, TrackedStep};
pub use transfer::{synth_permutation, synth_transfer};
