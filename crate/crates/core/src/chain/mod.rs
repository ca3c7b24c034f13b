//! Reversible finite-state chains and their subsystem spectral gap.

mod generator;
mod partition;
mod spectrum;

pub use generator::{GeneratorMatrix, BALANCE_TOL};
pub use partition::{conditional_expectation, StatePartition};
pub use spectrum::{
    semigroup_apply, spectrum, subsystem_gap_from_pairs, subsystem_spectral_gap, verify_decay, verify_decay_with,
    DecayReport, DecayRow, EigenGroup, GapValue, SpectralReport, SubsystemGap, COUPLING_TOL, DEGENERACY_RTOL,
};
