//! Potentials, coarse maps and Euler–Maruyama integration of
//! `dx = (-grad U + eps grad V) dt + sqrt(2) dW` with `V = v o pi`.

mod coarse;
mod functions;
mod potential;
mod sim;
mod trajectory;

pub use coarse::CoarseMap;
pub use functions::{Perturbation, SubsystemFn};
pub use potential::{GaussianTerm, MultiwellParams, Potential, PotentialKind};
pub use sim::{
    drift, ensemble_reduce, euler_maruyama_step, sample_equilibrium, simulate, simulate_coupled, simulate_ensemble,
    DriftWorkspace, NoiseScale, SimConfig, System, DIVERGENCE_RADIUS,
};
pub use trajectory::SubsystemTrajectory;
