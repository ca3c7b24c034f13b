// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod correlators;
pub mod dynamics;
pub mod error;
pub mod numerics;
pub mod oracle;
pub mod response;

pub use error::{Error, Result};
