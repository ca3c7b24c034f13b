//! Grid ground truth: a reversible discretization of the generator on a box
//! and exact evaluation of every response identity on it.

mod grid;
mod identities;
mod report;
mod semigroup;
mod spectral;
mod testbed;

pub use grid::{discretize, GridOperator, GridSpec, DEFAULT_TAIL_TOL, MAX_GRID_POINTS};
pub use identities::{
    dyson_residual, forced_mean, quadrature_norms, response_derivatives_fd, FdOptions, ResponseOracle,
};
pub use report::{oracle_sweep, write_oracle_csv, OracleRow};
pub use semigroup::{krylov_options, propagate, SymPropagator};
pub use spectral::{grid_partition, grid_subsystem_gap, lowest_eigenpairs, GridSpectrum, DEFAULT_EIGENPAIRS};
pub use testbed::{cosine_perturbation, multiwell_perturbation, Testbed, TestbedSetup, MULTIWELL_TAIL_TOL};
