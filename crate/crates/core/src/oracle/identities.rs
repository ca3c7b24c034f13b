use super::semigroup::SymPropagator;
use super::GridOperator;
use crate::correlators::CorrelatorSet;
use crate::dynamics::SubsystemFn;
use crate::error::{Error, Result};
use crate::numerics::quadrature::{prefix_weights, simpson_weights};
use crate::response::{second_order_approx, HolderNorms, NormBundle};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dot3(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    a.iter().zip(b).zip(c).map(|((x, y), z)| x * y * z).sum()
}

/// Exact (up to time quadrature) response quantities on a grid operator.
///
/// Holds `P_{j tau} V` and `P_{j tau} k` for `j = 0..=steps` in symmetrized
/// coordinates; every horizon `T = n tau` up to `steps tau` is then a matter
/// of inner products. Reversibility turns `<V P_t h>` into `<P_t V, h>`.
pub struct ResponseOracle<'a> {
    op: &'a GridOperator,
    tau: f64,
    k: Vec<f64>,
    uk0: Vec<f64>,
    uv0: Vec<f64>,
    pv: Vec<Vec<f64>>,
    pk: Vec<Vec<f64>>,
    plv: Option<Vec<Vec<f64>>>,
}

impl<'a> ResponseOracle<'a> {
    pub fn new(op: &'a GridOperator, kappa: &SubsystemFn, tau: f64, steps: usize) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Config("time step must be positive".into()));
        }
        let k = op.lift(kappa);
        let uk0 = op.to_sym(&k);
        let uv0 = op.to_sym(op.v());
        let prop = SymPropagator::new(op, 0.0);
        let pv = prop.series(tau, steps, &uv0)?;
        let pk = prop.series(tau, steps, &uk0)?;
        Ok(Self { op, tau, k, uk0, uv0, pv, pk, plv: None })
    }

    /// Oracle resolving horizons up to `t_max` with `intervals_per_unit`
    /// Simpson intervals per unit time (rounded so `t_max` is on the grid).
    pub fn for_horizon(op: &'a GridOperator, kappa: &SubsystemFn, t_max: f64, intervals: usize) -> Result<Self> {
        if !(t_max > 0.0) || intervals == 0 {
            return Err(Error::Config("need a positive horizon and interval count".into()));
        }
        Self::new(op, kappa, t_max / intervals as f64, intervals)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn max_steps(&self) -> usize {
        self.pv.len() - 1
    }

    pub fn kappa_on_grid(&self) -> &[f64] {
        &self.k
    }

    /// Interval count for horizon `t`; even, so `T/2` is a node and
    /// `[0, T]` takes composite Simpson.
    pub fn intervals(&self, t: f64) -> Result<usize> {
        let r = t / self.tau;
        let n = r.round();
        if (r - n).abs() > 1e-9 * r.max(1.0) || n < 0.0 {
            return Err(Error::LagGrid { lag: t, dt: self.tau });
        }
        let n = n as usize;
        if n > self.max_steps() {
            return Err(Error::Config(format!("horizon {t} beyond the precomputed range")));
        }
        if !n.is_multiple_of(2) {
            return Err(Error::Config(format!("horizon {t} needs an even interval count, got {n}")));
        }
        Ok(n)
    }

    fn sqrt_mu(&self) -> &[f64] {
        self.op.sqrt_mu()
    }

    /// The nine correlators, exact on the grid.
    pub fn correlators(&self, t: f64) -> Result<CorrelatorSet> {
        let n = self.intervals(t)?;
        let v = self.op.v();
        let (uk, uv) = (&self.uk0, &self.uv0);
        let values = [
            dot(self.sqrt_mu(), uk),
            dot(self.sqrt_mu(), uv),
            dot(uv, uk),
            dot(uv, uv),
            dot3(uv, uk, v),
            dot(&self.pv[n], uk),
            dot3(&self.pv[n], uk, v),
            dot(&self.pv[n / 2], uk),
            dot(&self.pv[n / 2], uv),
        ];
        let mut c = CorrelatorSet::exact(t, values);
        c.dt = self.tau;
        Ok(c)
    }

    /// `<Vk> - <V P_T k>`
    pub fn first_order(&self, t: f64) -> Result<f64> {
        let n = self.intervals(t)?;
        Ok(dot(&self.uv0, &self.uk0) - dot(&self.pv[n], &self.uk0))
    }

    /// `<V^2 k> - <V P_T (Vk)> + int_0^T <V P_t (L0V P_{T-t} k)> dt`
    pub fn exact_second_order(&self, t: f64) -> Result<f64> {
        let n = self.intervals(t)?;
        let v = self.op.v();
        let lv = self.op.lv();
        let statics = dot3(&self.uv0, &self.uk0, v) - dot3(&self.pv[n], &self.uk0, v);
        if n == 0 {
            return Ok(statics);
        }
        let w = simpson_weights(n, self.tau);
        let integral: f64 = (0..=n).map(|j| w[j] * dot3(&self.pv[j], lv, &self.pk[n - j])).sum();
        Ok(statics + integral)
    }

    /// The four-term approximation evaluated with exact grid correlators.
    pub fn second_order_approx(&self, t: f64) -> Result<f64> {
        Ok(second_order_approx(&self.correlators(t)?).value)
    }

    /// `(f_V, f_k)`: the parts of the exact coefficient the approximation
    /// drops. Needs a multiple of 4 intervals so each half is composite Simpson.
    pub fn remainder_terms(&self, t: f64) -> Result<(f64, f64)> {
        let n = self.intervals(t)?;
        if n % 4 != 0 {
            return Err(Error::Config(format!("remainder terms at {t} need a multiple of 4 intervals, got {n}")));
        }
        if n == 0 {
            return Ok((0.0, 0.0));
        }
        let lv = self.op.lv();
        let s = self.sqrt_mu();
        let mean_v = dot(s, &self.uv0);
        let mean_k = dot(s, &self.uk0);
        let half = n / 2;
        let w = simpson_weights(half, self.tau);
        let mut f_v = 0.0;
        let mut f_k = 0.0;
        let mut tmp = vec![0.0; s.len()];
        for i in 0..=half {
            // f_V at t = i tau, f_k at t = (half + i) tau
            for (o, (p, q)) in tmp.iter_mut().zip(self.pv[n - i].iter().zip(s)) {
                *o = p - mean_v * q;
            }
            f_v += w[i] * dot3(&tmp, &self.pk[i], lv);
            let j = half + i;
            for (o, (p, q)) in tmp.iter_mut().zip(self.pk[j].iter().zip(s)) {
                *o = p - mean_k * q;
            }
            f_k += w[i] * dot3(&tmp, &self.pv[n - j], lv);
        }
        Ok((f_v, f_k))
    }

    fn ensure_plv(&mut self) -> Result<()> {
        if self.plv.is_none() {
            let u = self.op.to_sym(self.op.lv());
            self.plv = Some(SymPropagator::new(self.op, 0.0).series(self.tau, self.max_steps(), &u)?);
        }
        Ok(())
    }

    /// First and second derivatives in `eps` of the response to the
    /// time-dependent forcing `eps h_t grad V`.
    ///
    /// `d1 = -int_0^T h_t <V L0 P_{T-t} k> dt`,
    /// `d2 = -2 int_0^T int_0^{t1} h_{t1} h_{t2} <(L0 V) P_{t1-t2}(grad V . grad P_{T-t1} k)> dt2 dt1`.
    pub fn general_protocol(&mut self, h: &dyn Fn(f64) -> f64, t: f64) -> Result<(f64, f64)> {
        let n = self.intervals(t)?;
        if n == 0 {
            return Ok((0.0, 0.0));
        }
        self.ensure_plv()?;
        let plv = self.plv.as_ref().expect("series computed");
        let tau = self.tau;
        let hv: Vec<f64> = (0..=n).map(|j| h(j as f64 * tau)).collect();
        let w = simpson_weights(n, tau);
        let u_lv = &plv[0];
        let d1 = -(0..=n).map(|j| w[j] * hv[j] * dot(u_lv, &self.pk[n - j])).sum::<f64>();

        let sb = self.op.sb();
        let dim = self.op.len();
        let mut z = vec![0.0; dim];
        let mut d2 = 0.0;
        for j in 1..=n {
            // z = int_0^{t_j} h(t2) P_{t_j - t2} LV dt2
            z.iter_mut().for_each(|x| *x = 0.0);
            let c = prefix_weights(j, tau);
            for i in 0..=j {
                let a = c[i] * hv[i];
                if a != 0.0 {
                    z.iter_mut().zip(&plv[j - i]).for_each(|(zz, p)| *zz += a * p);
                }
            }
            let bw = sb.apply(&self.pk[n - j]);
            d2 += w[j] * hv[j] * dot(&z, &bw);
        }
        Ok((d1, -2.0 * d2))
    }
}

/// `|P^eps_T g - P^0_T g - eps int_0^T P^0_s B P^eps_{T-s} g ds|` in `L^2(mu)`,
/// the time integral by composite Simpson on `intervals` panels.
pub fn dyson_residual(op: &GridOperator, epsilon: f64, t: f64, g: &[f64], intervals: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain("Dyson residual needs T > 0".into()));
    }
    if intervals < 32 || !intervals.is_multiple_of(2) {
        return Err(Error::Config("Dyson quadrature needs an even panel count of at least 32".into()));
    }
    let tau = t / intervals as f64;
    let u = op.to_sym(g);
    let p0 = SymPropagator::new(op, 0.0);
    let pe = SymPropagator::new(op, epsilon);
    let forced = pe.series(tau, intervals, &u)?;
    let free_t = p0.apply(t, &u)?;
    let w = simpson_weights(intervals, tau);
    // Horner in s: acc <- P0_tau acc + w_j B P^eps_{T - s_j} g, from s = T down to 0
    let sb = op.sb();
    let mut acc = sb.apply(&forced[0]);
    acc.iter_mut().for_each(|a| *a *= w[intervals]);
    for j in (0..intervals).rev() {
        acc = p0.apply(tau, &acc)?;
        let bj = sb.apply(&forced[intervals - j]);
        acc.iter_mut().zip(&bj).for_each(|(a, b)| *a += w[j] * b);
    }
    let r: f64 = (0..u.len())
        .map(|i| {
            let d = forced[intervals][i] - free_t[i] - epsilon * acc[i];
            d * d
        })
        .sum();
    Ok(r.sqrt())
}

#[derive(Clone, Copy, Debug)]
pub struct FdOptions {
    pub h: f64,
    /// Largest allowed relative change between steps `h` and `h/2`.
    pub rtol: f64,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self { h: 1e-3, rtol: 1e-4 }
    }
}

/// `F(eps) = <P^eps_T k>_mu`
pub fn forced_mean(op: &GridOperator, epsilon: f64, t: f64, k: &[f64]) -> Result<f64> {
    let u = SymPropagator::new(op, epsilon).apply(t, &op.to_sym(k))?;
    Ok(dot(op.sqrt_mu(), &u))
}

/// Central differences of `F` in `eps` at 0 with Richardson refinement.
/// Returns `(d1, d2)`.
pub fn response_derivatives_fd(op: &GridOperator, t: f64, kappa: &SubsystemFn, opts: FdOptions) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(Error::Domain("finite differences need T > 0".into()));
    }
    let k = op.lift(kappa);
    let f0 = forced_mean(op, 0.0, t, &k)?;
    let diffs = |h: f64| -> Result<(f64, f64)> {
        let fp = forced_mean(op, h, t, &k)?;
        let fm = forced_mean(op, -h, t, &k)?;
        Ok(((fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h)))
    };
    let (a1, a2) = diffs(opts.h)?;
    let (b1, b2) = diffs(opts.h / 2.0)?;
    // O(1) response values: the floor keeps tiny derivatives from failing on noise
    for (a, b) in [(a1, b1), (a2, b2)] {
        let rel = (a - b).abs() / b.abs().max(1.0);
        if rel > opts.rtol {
            return Err(Error::StepSize { relative: rel });
        }
    }
    Ok(((4.0 * b1 - a1) / 3.0, (4.0 * b2 - a2) / 3.0))
}

/// Norms for the remainder bounds by quadrature on the grid, with the
/// `p = q = 2` Hölder set.
pub fn quadrature_norms(op: &GridOperator, kappa: &SubsystemFn) -> NormBundle {
    let k = op.lift(kappa);
    let v = op.v();
    let lv = op.lv();
    NormBundle {
        k_inf: Some(op.sup_norm(&k)),
        k_2: op.norm(&k),
        v_inf: Some(op.sup_norm(v)),
        v_2: op.norm(v),
        lv_2: op.norm(lv),
        holder: Some(HolderNorms {
            p: 2.0,
            q: 2.0,
            k_2p: op.lp_norm(&k, 4.0),
            v_2p: op.lp_norm(v, 4.0),
            lv_2q: op.lp_norm(lv, 4.0),
        }),
    }
}
