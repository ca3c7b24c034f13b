//! Krylov-subspace action of the matrix exponential, `w = exp(t A) v`.
//!
//! Time-stepped Arnoldi/Lanczos with the local error estimate and step-size
//! control of Sidje's EXPOKIT `expv`. The small Hessenberg exponential is
//! taken with nalgebra's Padé scaling-and-squaring.

use nalgebra::DMatrix;

use super::{axpy, dot, norm2, CsrMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orthogonalization {
    /// Modified Gram–Schmidt against the full basis (Arnoldi).
    Full,
    /// Three-term recurrence; only valid for symmetric operators.
    Lanczos,
}

#[derive(Clone, Copy, Debug)]
pub struct KrylovOptions {
    pub dim: usize,
    /// Error tolerance per unit time, relative to `|v|`.
    pub tol: f64,
    pub orthogonalization: Orthogonalization,
    pub max_steps: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            dim: 30,
            tol: 1e-12,
            orthogonalization: Orthogonalization::Full,
            max_steps: 1_000_000,
        }
    }
}

fn round_step(t: f64) -> f64 {
    let s = 10f64.powf(t.log10().floor() - 1.0);
    (t / s).ceil() * s
}

/// Computes `exp(t A) v` for `t >= 0`.
pub fn expv(a: &CsrMatrix, t: f64, v: &[f64], opts: &KrylovOptions) -> Result<Vec<f64>> {
    if t < 0.0 {
        return Err(Error::Precondition(format!("negative time {t}")));
    }
    let n = v.len();
    let mut w = v.to_vec();
    let mut beta = norm2(&w);
    if t == 0.0 || beta == 0.0 {
        return Ok(w);
    }
    let anorm = a.norm_inf().max(f64::MIN_POSITIVE);
    let m = opts.dim.min(n).max(2);
    let tol = opts.tol * beta;
    let btol = 1e-14 * anorm;
    let (gamma, delta) = (0.9, 1.2);

    let mf = m as f64;
    let fact = ((mf + 1.0) / std::f64::consts::E).powf(mf + 1.0)
        * (2.0 * std::f64::consts::PI * (mf + 1.0)).sqrt();
    let mut t_new = (1.0 / anorm) * ((fact * tol) / (4.0 * beta * anorm)).powf(1.0 / mf);
    t_new = round_step(t_new);

    let mut basis: Vec<Vec<f64>> = (0..=m).map(|_| vec![0.0; n]).collect();
    let mut p = vec![0.0; n];
    let mut t_now = 0.0;
    let mut steps = 0;

    while t_now < t {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Numerical("Krylov exponential exceeded step budget".into()));
        }
        let mut t_step = (t - t_now).min(t_new);
        let mut h = DMatrix::<f64>::zeros(m + 2, m + 2);
        for (b, wi) in basis[0].iter_mut().zip(&w) {
            *b = wi / beta;
        }
        let mut k1 = 2usize;
        let mut mb = m;
        for j in 0..m {
            a.apply_into(&basis[j], &mut p);
            let start = match opts.orthogonalization {
                Orthogonalization::Full => 0,
                Orthogonalization::Lanczos => j.saturating_sub(1),
            };
            for i in start..=j {
                let hij = dot(&basis[i], &p);
                h[(i, j)] = hij;
                axpy(-hij, &basis[i], &mut p);
            }
            let s = norm2(&p);
            if s < btol {
                k1 = 0;
                mb = j + 1;
                t_step = t - t_now;
                break;
            }
            h[(j + 1, j)] = s;
            for (b, pi) in basis[j + 1].iter_mut().zip(&p) {
                *b = pi / s;
            }
        }
        let mut avnorm = 0.0;
        if k1 != 0 {
            h[(m + 1, m)] = 1.0;
            a.apply_into(&basis[m], &mut p);
            avnorm = norm2(&p);
        }

        let mut rejects = 0;
        let (f, err_loc, xm) = loop {
            let mx = mb + k1;
            let f = (h.view((0, 0), (mx, mx)) * t_step).exp();
            if k1 == 0 {
                break (f, btol, 1.0 / mf);
            }
            let phi1 = (beta * f[(m, 0)]).abs();
            let phi2 = (beta * f[(m + 1, 0)] * avnorm).abs();
            let (err, xm) = if phi1 > 10.0 * phi2 {
                (phi2, 1.0 / mf)
            } else if phi1 > phi2 {
                (phi1 * phi2 / (phi1 - phi2), 1.0 / mf)
            } else {
                (phi1, 1.0 / (mf - 1.0))
            };
            if err <= delta * t_step * tol {
                break (f, err, xm);
            }
            t_step = round_step(gamma * t_step * (t_step * tol / err).powf(xm));
            rejects += 1;
            if rejects > 60 {
                return Err(Error::Numerical("Krylov step size underflow".into()));
            }
        };

        let mx = mb + k1.saturating_sub(1);
        w.iter_mut().for_each(|x| *x = 0.0);
        for j in 0..mx {
            axpy(beta * f[(j, 0)], &basis[j], &mut w);
        }
        beta = norm2(&w);
        if !beta.is_finite() {
            return Err(Error::Numerical("non-finite Krylov iterate".into()));
        }
        t_now += t_step;
        let err = err_loc.max(f64::MIN_POSITIVE);
        t_new = round_step(gamma * t_step * (t_step * tol / err).powf(xm));
        if beta == 0.0 {
            break;
        }
    }
    Ok(w)
}
