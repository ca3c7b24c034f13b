use super::GridOperator;
use crate::error::{Error, Result};
use crate::numerics::{expv, CsrMatrix, KrylovOptions, Orthogonalization};

/// Krylov settings for grid propagation: the symmetric recurrence when the
/// operator is symmetric (`eps = 0`), full Arnoldi otherwise.
pub fn krylov_options(epsilon: f64) -> KrylovOptions {
    KrylovOptions {
        tol: 1e-13,
        orthogonalization: if epsilon == 0.0 { Orthogonalization::Lanczos } else { Orthogonalization::Full },
        ..KrylovOptions::default()
    }
}

/// `exp(t (L0 + eps B))` acting in symmetrized coordinates `u = sqrt(mu) g`,
/// where the Euclidean norm is the `L^2(mu)` norm.
pub struct SymPropagator {
    a: CsrMatrix,
    opts: KrylovOptions,
}

impl SymPropagator {
    pub fn new(op: &GridOperator, epsilon: f64) -> Self {
        // a vanishing perturbation leaves the symmetric operator
        let eps = if op.v().iter().all(|v| *v == op.v()[0]) { 0.0 } else { epsilon };
        Self { a: op.sym_generator(eps), opts: krylov_options(eps) }
    }

    pub fn apply(&self, t: f64, u: &[f64]) -> Result<Vec<f64>> {
        expv(&self.a, t, u, &self.opts)
    }

    /// `u, P_tau u, P_2tau u, .., P_{steps tau} u`.
    pub fn series(&self, tau: f64, steps: usize, u: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(steps + 1);
        out.push(u.to_vec());
        for j in 0..steps {
            let next = self.apply(tau, &out[j])?;
            out.push(next);
        }
        Ok(out)
    }
}

/// `P^eps_t g = exp(t (L0 + eps B)) g` on the grid.
pub fn propagate(op: &GridOperator, epsilon: f64, t: f64, g: &[f64]) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("propagation time must be nonnegative, got {t}")));
    }
    if g.len() != op.len() {
        return Err(Error::Config("grid function has the wrong length".into()));
    }
    if t == 0.0 {
        return Ok(g.to_vec());
    }
    let u = SymPropagator::new(op, epsilon).apply(t, &op.to_sym(g))?;
    Ok(op.from_sym(&u))
}
