//! Command line driver: configuration, experiment pipelines, the oracle
//! verification suite and SVG figures.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod experiment;
pub mod svg;
pub mod verify;
