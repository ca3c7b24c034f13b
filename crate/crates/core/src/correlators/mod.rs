//! Equilibrium averages and lagged correlations from subsystem trajectories.

mod batch;
mod bundle;

pub use batch::{batch_len, BatchMeans, Estimate, MIN_RELIABLE_BATCHES};
pub use bundle::{
    correlator_bundle, lag_steps, lagged_average, static_average, CorrelatorAccumulator, CorrelatorSet, Observable,
    CORRELATOR_NAMES, MIN_SAMPLES,
};
