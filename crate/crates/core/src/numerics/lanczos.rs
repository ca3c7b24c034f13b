//! Lowest eigenpairs of a large sparse symmetric negative semidefinite matrix
//! by shift-invert Lanczos with full reorthogonalization.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::banded::BandCholesky;
use super::{axpy, dot, norm2, CsrMatrix};
use crate::error::{Error, Result};

/// Eigenpairs `(lambda, u)` of `-S`, ascending in `lambda`, Euclidean-orthonormal `u`.
pub struct SymmetricPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Full dense eigendecomposition of `-S`.
pub fn dense_lowest(s: &CsrMatrix, k: usize) -> SymmetricPairs {
    let mut m = -s.to_dense();
    // symmetrize away round-off
    let mt = m.transpose();
    m = (m + mt) * 0.5;
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order.truncate(k);
    SymmetricPairs {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: order.iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect(),
    }
}

/// The lowest `k` converged eigenpairs of `-S`, for `-S` positive semidefinite
/// and `shift > 0`. Unconverged Ritz pairs are dropped from the tail.
pub fn shift_invert_lowest(s: &CsrMatrix, k: usize, shift: f64, seed: u64) -> Result<SymmetricPairs> {
    let n = s.dim();
    let a = s.scaled(-1.0).shifted(shift);
    let chol = BandCholesky::factor(&a)?;
    let m = (2 * k + 40).min(n);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut q0: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let nq = norm2(&q0);
    q0.iter_mut().for_each(|x| *x /= nq);
    q.push(q0);

    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    for j in 0..m {
        let mut w = chol.solve(&q[j]);
        let aj = dot(&q[j], &w);
        alpha.push(aj);
        axpy(-aj, &q[j], &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &q[j - 1], &mut w);
        }
        for _ in 0..2 {
            for qi in &q {
                let c = dot(qi, &w);
                axpy(-c, qi, &mut w);
            }
        }
        let bj = norm2(&w);
        beta.push(bj);
        if j + 1 == m || bj < 1e-12 * aj.abs().max(1.0) {
            break;
        }
        w.iter_mut().for_each(|x| *x /= bj);
        q.push(w);
    }
    let steps = alpha.len();
    let mut t = DMatrix::zeros(steps, steps);
    for i in 0..steps {
        t[(i, i)] = alpha[i];
        if i + 1 < steps {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let last_beta = beta[steps - 1];
    let mut order: Vec<usize> = (0..steps).collect();
    // largest Ritz values of the inverse are the smallest of -S
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut values = Vec::new();
    let mut vectors = Vec::new();
    for &i in order.iter().take(k) {
        let theta = eig.eigenvalues[i];
        let y = eig.eigenvectors.column(i);
        let resid = (last_beta * y[steps - 1]).abs();
        if theta <= 0.0 || resid > 1e-8 * theta {
            break;
        }
        let mut u = vec![0.0; n];
        for (c, qc) in y.iter().zip(&q) {
            axpy(*c, qc, &mut u);
        }
        let nu = norm2(&u);
        u.iter_mut().for_each(|x| *x /= nu);
        values.push(1.0 / theta - shift);
        vectors.push(u);
    }
    if values.is_empty() {
        return Err(Error::Numerical("shift-invert Lanczos did not converge".into()));
    }
    Ok(SymmetricPairs { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_invert_matches_dense() {
        let n = 120;
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![];
                let w = 1.0 + 0.5 * (i as f64 * 0.1).sin();
                if i > 0 {
                    r.push((i - 1, 1.0));
                }
                if i + 1 < n {
                    r.push((i + 1, 1.0));
                }
                let d = r.len() as f64;
                r.push((i, -d - 0.01 * w));
                r
            })
            .collect();
        let s = CsrMatrix::from_rows(rows);
        let dense = dense_lowest(&s, 8);
        let sparse = shift_invert_lowest(&s, 8, 1e-3, 7).unwrap();
        assert_eq!(sparse.values.len(), 8);
        for (a, b) in dense.values.iter().zip(&sparse.values) {
            assert!((a - b).abs() < 1e-9 * a.abs().max(1.0), "{a} vs {b}");
        }
        for (u, v) in dense.vectors.iter().zip(&sparse.vectors) {
            assert!((dot(u, v).abs() - 1.0).abs() < 1e-8);
        }
    }
}
