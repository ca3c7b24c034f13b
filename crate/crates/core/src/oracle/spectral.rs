use super::GridOperator;
use crate::chain::{subsystem_gap_from_pairs, StatePartition, SubsystemGap};
use crate::error::Result;
use crate::numerics::lanczos::{dense_lowest, shift_invert_lowest};

const DENSE_LIMIT: usize = 600;
const SHIFT: f64 = 1e-2;
const LANCZOS_SEED: u64 = 0x5eed;
pub const DEFAULT_EIGENPAIRS: usize = 50;

/// Lowest eigenpairs of `-L0`, eigenvectors `mu`-orthonormal on the grid.
#[derive(Clone, Debug)]
pub struct GridSpectrum {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

pub fn lowest_eigenpairs(op: &GridOperator, k: usize) -> Result<GridSpectrum> {
    let pairs = if op.len() <= DENSE_LIMIT {
        dense_lowest(op.s0(), k)
    } else {
        shift_invert_lowest(op.s0(), k, SHIFT, LANCZOS_SEED)?
    };
    let vectors = pairs.vectors.iter().map(|u| op.from_sym(u)).collect();
    Ok(GridSpectrum { values: pairs.values, vectors })
}

/// Nodes sharing the same projected cell indices form one class.
pub fn grid_partition(op: &GridOperator) -> StatePartition {
    let idx = op.coarse().indices();
    let labels: Vec<i64> = (0..op.len())
        .map(|node| {
            idx.iter().fold(0i64, |acc, &axis| acc * (op.spec().n[axis] as i64) + op.axis_index(node, axis) as i64)
        })
        .collect();
    StatePartition::from_labels(&labels).expect("non-empty grid")
}

/// Subsystem spectral gap of the grid generator for the operator's projection.
pub fn grid_subsystem_gap(op: &GridOperator, spectrum: &GridSpectrum, tol: f64) -> SubsystemGap {
    subsystem_gap_from_pairs(&spectrum.values, &spectrum.vectors, op.mu(), &grid_partition(op), tol)
}
