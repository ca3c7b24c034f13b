//! Second-order response prediction and its remainder bounds.

mod bound;
mod estimator;

pub use bound::{
    decay_factor, error_bound, error_bound_holder, ou_bound, ou_constant, ou_gap, peak_horizon, HolderNorms, NormBundle,
};
pub use estimator::{
    assemble, first_order, predict, second_order_approx, write_response_csv, Coefficient, ResponseEstimate,
};
