use std::io::Write;

use super::identities::{response_derivatives_fd, FdOptions, ResponseOracle};
use super::GridOperator;
use crate::dynamics::SubsystemFn;
use crate::error::Result;
use crate::response::{error_bound, NormBundle};

/// One horizon of the oracle cross-check.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleRow {
    pub t: f64,
    pub d1_fd: f64,
    pub d1_lemma: f64,
    pub d2_fd: f64,
    pub d2_exact: f64,
    pub d2_approx: f64,
    pub f_v: f64,
    pub f_k: f64,
    pub bound: f64,
}

impl OracleRow {
    /// `exact - approx - (f_V + f_k)`, zero up to time quadrature.
    pub fn decomposition_residual(&self) -> f64 {
        self.d2_exact - self.d2_approx - (self.f_v + self.f_k)
    }

    pub fn bound_holds(&self) -> bool {
        (self.f_v + self.f_k).abs() <= self.bound
    }
}

/// Evaluates every column at each horizon in `ts`. Finite differences are
/// skipped (NaN) when `with_fd` is false.
pub fn oracle_sweep(
    op: &GridOperator,
    oracle: &ResponseOracle<'_>,
    kappa: &SubsystemFn,
    norms: &NormBundle,
    lambda_pi: f64,
    ts: &[f64],
    with_fd: bool,
) -> Result<Vec<OracleRow>> {
    ts.iter()
        .map(|&t| {
            let (d1_fd, d2_fd) = if with_fd && t > 0.0 {
                response_derivatives_fd(op, t, kappa, FdOptions::default())?
            } else {
                (f64::NAN, f64::NAN)
            };
            let (f_v, f_k) = oracle.remainder_terms(t)?;
            Ok(OracleRow {
                t,
                d1_fd,
                d1_lemma: oracle.first_order(t)?,
                d2_fd,
                d2_exact: oracle.exact_second_order(t)?,
                d2_approx: oracle.second_order_approx(t)?,
                f_v,
                f_k,
                bound: error_bound(norms, lambda_pi, t)?,
            })
        })
        .collect()
}

pub fn write_oracle_csv<W: Write>(rows: &[OracleRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "T,d1_fd,d1_lemma,d2_fd,d2_exact,d2_approx,fV,fk,bound")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            r.t, r.d1_fd, r.d1_lemma, r.d2_fd, r.d2_exact, r.d2_approx, r.f_v, r.f_k, r.bound
        )?;
    }
    Ok(())
}
