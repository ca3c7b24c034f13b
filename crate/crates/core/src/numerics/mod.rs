//! Linear-algebra and quadrature kernels shared by the chain and grid code.

pub mod banded;
pub mod krylov;
pub mod lanczos;
pub mod quadrature;
pub mod sparse;

pub use krylov::{expv, KrylovOptions, Orthogonalization};
pub use quadrature::{simpson, simpson_weights};
pub use sparse::CsrMatrix;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
