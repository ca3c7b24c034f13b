use std::io::Write;

use crate::correlators::CorrelatorSet;

/// Value with a propagated standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficient {
    pub value: f64,
    pub se: f64,
}

fn quad(terms: &[f64]) -> f64 {
    terms.iter().map(|t| t * t).sum::<f64>().sqrt()
}

/// `<Vk> - <V P_T k>`
pub fn first_order(c: &CorrelatorSet) -> Coefficient {
    Coefficient {
        value: c.mean_vk.mean - c.lag_v_k_t.mean,
        se: quad(&[c.mean_vk.se, c.lag_v_k_t.se]),
    }
}

/// `<V^2 k> - <V P_T Vk> + <V>(<V P_{T/2} k> - <Vk>) + <k>(<V P_{T/2} V> - <V^2>)`
///
/// Errors combine in quadrature with first-order propagation through the
/// products; cross-covariances between correlators are ignored.
pub fn second_order_approx(c: &CorrelatorSet) -> Coefficient {
    let d_k = c.lag_v_k_half_t.mean - c.mean_vk.mean;
    let d_v = c.lag_v_v_half_t.mean - c.mean_v2.mean;
    let value = c.mean_v2k.mean - c.lag_v_vk_t.mean + c.mean_v.mean * d_k + c.mean_k.mean * d_v;
    let se = quad(&[
        c.mean_v2k.se,
        c.lag_v_vk_t.se,
        d_k * c.mean_v.se,
        c.mean_v.mean * c.lag_v_k_half_t.se,
        c.mean_v.mean * c.mean_vk.se,
        d_v * c.mean_k.se,
        c.mean_k.mean * c.lag_v_v_half_t.se,
        c.mean_k.mean * c.mean_v2.se,
    ]);
    Coefficient { value, se }
}

/// Second-order response prediction at one horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseEstimate {
    pub t: f64,
    pub order0: f64,
    pub order1: f64,
    pub order2: f64,
    pub epsilon: f64,
    pub prediction: f64,
    /// Bound on the adiabatic remainder of the second-order coefficient.
    pub bound: Option<f64>,
    pub se0: f64,
    pub se1: f64,
    pub se2: f64,
}

impl ResponseEstimate {
    pub fn first_order_prediction(&self) -> f64 {
        self.order0 + self.epsilon * self.order1
    }

    /// se of the full prediction, orders combined in quadrature.
    pub fn prediction_se(&self) -> f64 {
        let e = self.epsilon;
        quad(&[self.se0, e * self.se1, 0.5 * e * e * self.se2])
    }

    /// Half-width of the band the remainder bound induces on the prediction.
    pub fn prediction_band(&self) -> Option<f64> {
        self.bound.map(|b| 0.5 * self.epsilon * self.epsilon * b)
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }
}

pub fn assemble(order0: f64, order1: f64, order2: f64, epsilon: f64) -> f64 {
    order0 + epsilon * order1 + 0.5 * epsilon * epsilon * order2
}

pub fn predict(c: &CorrelatorSet, epsilon: f64) -> ResponseEstimate {
    let o1 = first_order(c);
    let o2 = second_order_approx(c);
    ResponseEstimate {
        t: c.t,
        order0: c.mean_k.mean,
        order1: o1.value,
        order2: o2.value,
        epsilon,
        prediction: assemble(c.mean_k.mean, o1.value, o2.value, epsilon),
        bound: None,
        se0: c.mean_k.se,
        se1: o1.se,
        se2: o2.se,
    }
}

/// `T,order0,order1,order2,epsilon,prediction,bound,se1,se2`; a missing
/// bound is written as an empty field.
pub fn write_response_csv<W: Write>(rows: &[ResponseEstimate], mut w: W) -> std::io::Result<()> {
    writeln!(w, "T,order0,order1,order2,epsilon,prediction,bound,se1,se2")?;
    for r in rows {
        let bound = r.bound.map(|b| format!("{b:.10e}")).unwrap_or_default();
        writeln!(
            w,
            "{},{:.10e},{:.10e},{:.10e},{},{:.10e},{},{:.4e},{:.4e}",
            r.t, r.order0, r.order1, r.order2, r.epsilon, r.prediction, bound, r.se1, r.se2
        )?;
    }
    Ok(())
}
