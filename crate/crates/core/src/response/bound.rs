use crate::error::{Error, Result};

/// Norms of `p`, `q` Hölder type used when `V` is unbounded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderNorms {
    pub p: f64,
    pub q: f64,
    pub k_2p: f64,
    pub v_2p: f64,
    pub lv_2q: f64,
}

/// The function norms entering the remainder bounds. All `L^p` norms are
/// with respect to the equilibrium measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormBundle {
    pub k_inf: Option<f64>,
    pub k_2: f64,
    pub v_inf: Option<f64>,
    pub v_2: f64,
    pub lv_2: f64,
    pub holder: Option<HolderNorms>,
}

/// `(exp(-l T/2) - exp(-l T)) / l`, the time factor of both bounds.
pub fn decay_factor(lambda_pi: f64, t: f64) -> f64 {
    if lambda_pi.is_infinite() {
        return 0.0;
    }
    // (e^{-lT/2} - e^{-lT}) / l  =  e^{-lT/2} (1 - e^{-lT/2}) / l
    let h = -0.5 * lambda_pi * t;
    h.exp() * -h.exp_m1() / lambda_pi
}

fn check_gap(lambda_pi: f64, t: f64) -> Result<()> {
    if !(lambda_pi > 0.0) {
        return Err(Error::Domain(format!("subsystem gap must be positive, got {lambda_pi}")));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("horizon must be nonnegative, got {t}")));
    }
    Ok(())
}

fn nonnegative(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Domain("norms must be nonnegative".into()));
    }
    Ok(())
}

/// `(|k|_inf |V|_2 + |V|_inf |k|_2) |LV|_2 (exp(-l T/2) - exp(-l T)) / l`
pub fn error_bound(n: &NormBundle, lambda_pi: f64, t: f64) -> Result<f64> {
    check_gap(lambda_pi, t)?;
    let k_inf = n.k_inf.ok_or(Error::MissingNorm("k_inf; use error_bound_holder"))?;
    let v_inf = n.v_inf.ok_or(Error::MissingNorm("v_inf; use error_bound_holder"))?;
    nonnegative(&[k_inf, v_inf, n.k_2, n.v_2, n.lv_2])?;
    Ok((k_inf * n.v_2 + v_inf * n.k_2) * n.lv_2 * decay_factor(lambda_pi, t))
}

/// Hölder variant for unbounded `V` or `k`:
/// `(|k|_2p |V|_2 |LV|_2q + |V|_{inf or 2p} |k|_2) |LV|_2 (exp(-l T/2) - exp(-l T)) / l`.
pub fn error_bound_holder(n: &NormBundle, lambda_pi: f64, t: f64) -> Result<f64> {
    check_gap(lambda_pi, t)?;
    let h = n.holder.ok_or(Error::MissingNorm("Hölder norms"))?;
    if !(h.p > 1.0 && h.q > 1.0) || (1.0 / h.p + 1.0 / h.q - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidHolder { p: h.p, q: h.q });
    }
    let v_sup = n.v_inf.unwrap_or(h.v_2p);
    nonnegative(&[h.k_2p, h.v_2p, h.lv_2q, v_sup, n.k_2, n.v_2, n.lv_2])?;
    Ok((h.k_2p * n.v_2 * h.lv_2q + v_sup * n.k_2) * n.lv_2 * decay_factor(lambda_pi, t))
}

/// Horizon maximizing the time factor: `T = 2 ln 2 / lambda`.
pub fn peak_horizon(lambda_pi: f64) -> f64 {
    2.0 * std::f64::consts::LN_2 / lambda_pi
}

/// Closed-form norm constant for the two-timescale OU system with
/// `p = q = 2`, evaluated exactly as displayed.
pub fn ou_constant(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 4.0) {
        return Err(Error::Domain(format!("ou_constant needs 0 < r < 4, got {r}")));
    }
    let first = (3.0 * (2.0 * r / (4.0 - r)).powi(2)).powf(0.25)
        * (3.0 / (4.0 * r - r * r).powi(2)
            * (64.0 * r.powi(2) + 32.0 * r.powi(3) + 20.0 * r.powi(4) - 8.0 * r.powi(5)))
        .powf(0.25);
    let second = 2.0 / (4.0 - r).sqrt() * ((2.0 * r + 4.0) / (4.0 - r)).sqrt();
    Ok(first + second)
}

/// Smallest eigenvalue of `a = [[2, -r], [-r, 2r]]`.
pub fn ou_gap(r: f64) -> f64 {
    -(2.0 * r * r - 2.0 * r + 1.0).sqrt() + r + 1.0
}

/// Remainder bound built from `ou_constant` and `ou_gap`.
pub fn ou_bound(r: f64, t: f64) -> Result<f64> {
    let lambda = ou_gap(r);
    check_gap(lambda, t)?;
    Ok(ou_constant(r)? * decay_factor(lambda, t))
}
