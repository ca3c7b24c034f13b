use std::io::{BufRead, Write};

use super::batch::{batch_len, BatchMeans, Estimate};
use crate::dynamics::{SubsystemFn, SubsystemTrajectory};
use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 16;

/// Named scalar function of the subsystem state.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    pub name: String,
    pub m: usize,
    pub f: SubsystemFn,
}

impl Observable {
    pub fn new(name: impl Into<String>, m: usize, f: SubsystemFn) -> Result<Self> {
        if let Some(c) = f.max_coord() {
            if c >= m {
                return Err(Error::Config(format!("observable reads coordinate {c} of a {m}-dimensional subsystem")));
            }
        }
        Ok(Self { name: name.into(), m, f })
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.f.value(y)
    }

    fn series(&self, traj: &SubsystemTrajectory) -> Vec<f64> {
        traj.iter().map(|y| self.eval(y)).collect()
    }
}

/// Number of sampling steps in `lag`; errors unless `lag` sits on the grid.
pub fn lag_steps(lag: f64, dt: f64) -> Result<usize> {
    let r = lag / dt;
    let k = r.round();
    if !(lag >= 0.0) || (r - k).abs() > 1e-9 * r.abs().max(1.0) {
        return Err(Error::LagGrid { lag, dt });
    }
    Ok(k as usize)
}

fn check_dim(traj: &SubsystemTrajectory, obs: &Observable) -> Result<()> {
    if traj.dim() != obs.m {
        return Err(Error::Config(format!(
            "observable {} expects dimension {}, trajectory has {}",
            obs.name,
            obs.m,
            traj.dim()
        )));
    }
    Ok(())
}

/// Time average of `obs` along an equilibrium trajectory.
pub fn static_average(traj: &SubsystemTrajectory, obs: &Observable) -> Result<Estimate> {
    check_dim(traj, obs)?;
    let n = traj.len();
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientData { got: n, need: MIN_SAMPLES });
    }
    let mut b = BatchMeans::new();
    b.add_series(traj.iter().map(|y| obs.eval(y)), batch_len(n));
    Ok(b.estimate())
}

/// Average of `a(y_i) b(y_{i+l})` over all overlapping pairs, `l = lag / dt`.
pub fn lagged_average(traj: &SubsystemTrajectory, a: &Observable, b: &Observable, lag: f64) -> Result<Estimate> {
    check_dim(traj, a)?;
    check_dim(traj, b)?;
    let l = lag_steps(lag, traj.dt())?;
    let n = traj.len();
    if l >= n {
        return Err(Error::InsufficientData { got: n, need: l + 1 });
    }
    let av = a.series(traj);
    let bv = b.series(traj);
    let pairs = n - l;
    let mut acc = BatchMeans::new();
    acc.add_series((0..pairs).map(|i| av[i] * bv[i + l]), batch_len(pairs));
    Ok(acc.estimate())
}

pub const CORRELATOR_NAMES: [&str; 9] = [
    "mean_k",
    "mean_V",
    "mean_Vk",
    "mean_V2",
    "mean_V2k",
    "lag_V_k_T",
    "lag_V_Vk_T",
    "lag_V_k_halfT",
    "lag_V_V_halfT",
];

/// The nine equilibrium averages entering the second-order estimator.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatorSet {
    pub t: f64,
    pub dt: f64,
    pub n_traj: u64,
    pub n_samples: u64,
    pub mean_k: Estimate,
    pub mean_v: Estimate,
    pub mean_vk: Estimate,
    pub mean_v2: Estimate,
    pub mean_v2k: Estimate,
    /// `<V P_T k>`
    pub lag_v_k_t: Estimate,
    /// `<V P_T (V k)>`
    pub lag_v_vk_t: Estimate,
    /// `<V P_{T/2} k>`
    pub lag_v_k_half_t: Estimate,
    /// `<V P_{T/2} V>`
    pub lag_v_v_half_t: Estimate,
}

impl CorrelatorSet {
    /// A set of exactly known values (zero se), e.g. from the grid oracle.
    pub fn exact(t: f64, values: [f64; 9]) -> Self {
        let mut c = Self::blank(t);
        for (i, v) in values.into_iter().enumerate() {
            *c.entry_mut(i) = Estimate::exact(v);
        }
        c
    }

    fn blank(t: f64) -> Self {
        let e = Estimate::exact(f64::NAN);
        Self {
            t,
            dt: f64::NAN,
            n_traj: 0,
            n_samples: 0,
            mean_k: e,
            mean_v: e,
            mean_vk: e,
            mean_v2: e,
            mean_v2k: e,
            lag_v_k_t: e,
            lag_v_vk_t: e,
            lag_v_k_half_t: e,
            lag_v_v_half_t: e,
        }
    }

    pub fn entries(&self) -> [Estimate; 9] {
        [
            self.mean_k,
            self.mean_v,
            self.mean_vk,
            self.mean_v2,
            self.mean_v2k,
            self.lag_v_k_t,
            self.lag_v_vk_t,
            self.lag_v_k_half_t,
            self.lag_v_v_half_t,
        ]
    }

    fn entry_mut(&mut self, i: usize) -> &mut Estimate {
        match i {
            0 => &mut self.mean_k,
            1 => &mut self.mean_v,
            2 => &mut self.mean_vk,
            3 => &mut self.mean_v2,
            4 => &mut self.mean_v2k,
            5 => &mut self.lag_v_k_t,
            6 => &mut self.lag_v_vk_t,
            7 => &mut self.lag_v_k_half_t,
            _ => &mut self.lag_v_v_half_t,
        }
    }

    /// `<V^2> >= <V>^2` up to three combined standard errors.
    pub fn variance_consistent(&self) -> bool {
        let se = (self.mean_v2.se.powi(2) + (2.0 * self.mean_v.mean * self.mean_v.se).powi(2)).sqrt();
        self.mean_v2.mean >= self.mean_v.mean.powi(2) - 3.0 * se.max(0.0)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "name,value,se")?;
        for (name, e) in CORRELATOR_NAMES.iter().zip(self.entries()) {
            writeln!(w, "{name},{:.16e},{:.16e}", e.mean, e.se)?;
        }
        writeln!(w, "T,{},", self.t)?;
        writeln!(w, "dt,{},", self.dt)?;
        writeln!(w, "n_traj,{},", self.n_traj)?;
        writeln!(w, "n_samples,{},", self.n_samples)
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut c = Self::blank(f64::NAN);
        let mut seen = [false; 9];
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if i == 0 || line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Parse { line: i + 1, msg: msg.to_string() };
            let mut parts = line.split(',');
            let name = parts.next().unwrap_or("");
            let value = parts.next().ok_or_else(|| bad("missing value"))?;
            let se = parts.next().unwrap_or("").trim();
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("bad number"));
            match name {
                "T" => c.t = num(value)?,
                "dt" => c.dt = num(value)?,
                "n_traj" => c.n_traj = value.trim().parse().map_err(|_| bad("bad count"))?,
                "n_samples" => c.n_samples = value.trim().parse().map_err(|_| bad("bad count"))?,
                _ => {
                    let k = CORRELATOR_NAMES.iter().position(|n| *n == name).ok_or_else(|| bad("unknown entry"))?;
                    let se = if se.is_empty() { 0.0 } else { num(se)? };
                    *c.entry_mut(k) = Estimate { mean: num(value)?, se, n_pairs: 0, n_batches: 0, reliable: true };
                    seen[k] = true;
                }
            }
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(Error::Parse { line: 0, msg: format!("missing entry {}", CORRELATOR_NAMES[k]) });
        }
        Ok(c)
    }
}

#[derive(Clone, Debug)]
struct Horizon {
    t: f64,
    lag: usize,
    half: usize,
    len_full: usize,
    len_half: usize,
    // V k(+l), V Vk(+l), V k(+l/2), V V(+l/2)
    acc: [BatchMeans; 4],
}

/// Streaming, mergeable accumulator for correlator sets at several horizons.
///
/// Batch lengths are fixed up front from the expected trajectory lengths so
/// that splitting the ensemble across workers cannot change the result.
#[derive(Clone, Debug)]
pub struct CorrelatorAccumulator {
    kappa: Observable,
    v: Observable,
    dt: f64,
    static_len: usize,
    statics: [BatchMeans; 5],
    horizons: Vec<Horizon>,
    n_traj: u64,
    n_samples: u64,
}

impl CorrelatorAccumulator {
    pub fn new(kappa: Observable, v: Observable, dt: f64, horizons: &[f64], lengths: &[usize]) -> Result<Self> {
        if kappa.m != v.m {
            return Err(Error::Config("kappa and v act on different subsystem dimensions".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::Config("dt must be positive".into()));
        }
        let total: usize = lengths.iter().sum();
        if total < MIN_SAMPLES {
            return Err(Error::InsufficientData { got: total, need: MIN_SAMPLES });
        }
        let pairs = |l: usize| lengths.iter().map(|&n| n.saturating_sub(l)).sum::<usize>();
        let mut hs = Vec::with_capacity(horizons.len());
        for &t in horizons {
            let lag = lag_steps(t, dt)?;
            if lag % 2 != 0 {
                return Err(Error::LagGrid { lag: t / 2.0, dt });
            }
            if pairs(lag) == 0 {
                return Err(Error::InsufficientData { got: lengths.iter().copied().max().unwrap_or(0), need: lag + 1 });
            }
            hs.push(Horizon {
                t,
                lag,
                half: lag / 2,
                len_full: batch_len(pairs(lag)),
                len_half: batch_len(pairs(lag / 2)),
                acc: Default::default(),
            });
        }
        Ok(Self {
            kappa,
            v,
            dt,
            static_len: batch_len(total),
            statics: Default::default(),
            horizons: hs,
            n_traj: 0,
            n_samples: 0,
        })
    }

    /// Same configuration, no data.
    pub fn fork(&self) -> Self {
        let mut c = self.clone();
        c.statics = Default::default();
        c.horizons.iter_mut().for_each(|h| h.acc = Default::default());
        c.n_traj = 0;
        c.n_samples = 0;
        c
    }

    pub fn push(&mut self, traj: &SubsystemTrajectory) -> Result<()> {
        if (traj.dt() - self.dt).abs() > 1e-12 * self.dt {
            return Err(Error::Config(format!("mixed time steps: {} and {}", traj.dt(), self.dt)));
        }
        if traj.epsilon() != 0.0 {
            return Err(Error::Config("correlators need equilibrium (epsilon = 0) trajectories".into()));
        }
        check_dim(traj, &self.kappa)?;
        let k = self.kappa.series(traj);
        let v = self.v.series(traj);
        self.push_series(&k, &v)
    }

    /// Adds one trajectory given as the series `k(y_i)` and `V(y_i)`.
    pub fn push_series(&mut self, k: &[f64], v: &[f64]) -> Result<()> {
        let n = k.len();
        if v.len() != n {
            return Err(Error::Config("series lengths differ".into()));
        }
        for h in &self.horizons {
            if h.lag >= n {
                return Err(Error::InsufficientData { got: n, need: h.lag + 1 });
            }
        }
        // Sum each trajectory on its own, then fold it in: the running totals
        // then depend only on trajectory order, not on how a parallel run
        // grouped the trajectories before merging.
        let mut one = self.fork();
        let len = self.static_len;
        one.statics[0].add_series(k.iter().copied(), len);
        one.statics[1].add_series(v.iter().copied(), len);
        one.statics[2].add_series(v.iter().zip(k).map(|(a, b)| a * b), len);
        one.statics[3].add_series(v.iter().map(|a| a * a), len);
        one.statics[4].add_series(v.iter().zip(k).map(|(a, b)| a * a * b), len);
        for h in &mut one.horizons {
            let (l, m) = (h.lag, h.half);
            h.acc[0].add_series((0..n - l).map(|i| v[i] * k[i + l]), h.len_full);
            h.acc[1].add_series((0..n - l).map(|i| v[i] * v[i + l] * k[i + l]), h.len_full);
            h.acc[2].add_series((0..n - m).map(|i| v[i] * k[i + m]), h.len_half);
            h.acc[3].add_series((0..n - m).map(|i| v[i] * v[i + m]), h.len_half);
        }
        one.n_traj = 1;
        one.n_samples = n as u64;
        self.merge(&one);
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.statics.iter_mut().zip(&other.statics) {
            a.merge(b);
        }
        for (ha, hb) in self.horizons.iter_mut().zip(&other.horizons) {
            for (a, b) in ha.acc.iter_mut().zip(&hb.acc) {
                a.merge(b);
            }
        }
        self.n_traj += other.n_traj;
        self.n_samples += other.n_samples;
    }

    pub fn n_traj(&self) -> u64 {
        self.n_traj
    }

    pub fn finish(&self) -> Result<Vec<CorrelatorSet>> {
        if (self.n_samples as usize) < MIN_SAMPLES {
            return Err(Error::InsufficientData { got: self.n_samples as usize, need: MIN_SAMPLES });
        }
        let s: Vec<Estimate> = self.statics.iter().map(BatchMeans::estimate).collect();
        Ok(self
            .horizons
            .iter()
            .map(|h| CorrelatorSet {
                t: h.t,
                dt: self.dt,
                n_traj: self.n_traj,
                n_samples: self.n_samples,
                mean_k: s[0],
                mean_v: s[1],
                mean_vk: s[2],
                mean_v2: s[3],
                mean_v2k: s[4],
                lag_v_k_t: h.acc[0].estimate(),
                lag_v_vk_t: h.acc[1].estimate(),
                lag_v_k_half_t: h.acc[2].estimate(),
                lag_v_v_half_t: h.acc[3].estimate(),
            })
            .collect())
    }
}

/// All nine correlators at horizon `t`, pooled over `trajs` with pair-count
/// weights.
pub fn correlator_bundle(
    trajs: &[SubsystemTrajectory],
    kappa: &Observable,
    v: &Observable,
    t: f64,
) -> Result<CorrelatorSet> {
    let first = trajs.first().ok_or(Error::InsufficientData { got: 0, need: MIN_SAMPLES })?;
    let lengths: Vec<usize> = trajs.iter().map(|x| x.len()).collect();
    let mut acc = CorrelatorAccumulator::new(kappa.clone(), v.clone(), first.dt(), &[t], &lengths)?;
    for tr in trajs {
        acc.push(tr)?;
    }
    Ok(acc.finish()?.remove(0))
}
