use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{CoarseMap, Perturbation, Potential, SubsystemTrajectory};
use crate::error::{Error, Result};

/// Escape radius beyond which a path is declared divergent.
pub const DIVERGENCE_RADIUS: f64 = 1e6;

/// Prefactor of the Brownian increment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NoiseScale {
    /// `dW`
    Unit,
    /// `sqrt(2) dW`, for which `exp(-U)` is stationary.
    #[default]
    Sqrt2,
}

impl NoiseScale {
    pub fn value(self) -> f64 {
        match self {
            Self::Unit => 1.0,
            Self::Sqrt2 => std::f64::consts::SQRT_2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_max: f64,
    pub burn_in: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub n_traj: usize,
    pub noise: NoiseScale,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { dt: 1e-3, t_max: 10.0, burn_in: 100.0, epsilon: 0.0, seed: 0, n_traj: 10_000, noise: NoiseScale::Sqrt2 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max >= 0.0) {
            return Err(Error::Config(format!("t_max must be >= 0, got {}", self.t_max)));
        }
        if !(self.burn_in >= 0.0) {
            return Err(Error::Config(format!("burn_in must be >= 0, got {}", self.burn_in)));
        }
        if !self.epsilon.is_finite() {
            return Err(Error::Config("epsilon must be finite".into()));
        }
        if self.n_traj == 0 {
            return Err(Error::Config("n_traj must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of steps covering `t`, tolerant to round-off in `t / dt`.
    pub fn steps_for(&self, t: f64) -> usize {
        (t / self.dt + 1e-9).floor() as usize
    }

    /// Seed of replicate `i` in an ensemble.
    pub fn replicate_seed(&self, i: usize) -> u64 {
        self.seed ^ i as u64
    }
}

/// A potential, a perturbation acting through a coarse map, and the map itself.
#[derive(Clone, Debug)]
pub struct System {
    pub potential: Potential,
    pub perturbation: Perturbation,
    pub coarse: CoarseMap,
}

/// Scratch buffers for the drift evaluation.
#[derive(Clone, Debug)]
pub struct DriftWorkspace {
    y: Vec<f64>,
    gv: Vec<f64>,
    lifted: Vec<f64>,
}

impl System {
    pub fn new(potential: Potential, perturbation: Perturbation, coarse: CoarseMap) -> Result<Self> {
        if coarse.full_dim() != potential.dim() {
            return Err(Error::Config(format!(
                "coarse map acts on R^{} but the potential lives on R^{}",
                coarse.full_dim(),
                potential.dim()
            )));
        }
        if let Some(c) = perturbation.v.max_coord() {
            if c >= coarse.sub_dim() {
                return Err(Error::Config(format!("perturbation reads subsystem coordinate {c}")));
            }
        }
        Ok(Self { potential, perturbation, coarse })
    }

    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    pub fn workspace(&self) -> DriftWorkspace {
        DriftWorkspace {
            y: vec![0.0; self.coarse.sub_dim()],
            gv: vec![0.0; self.coarse.sub_dim()],
            lifted: vec![0.0; self.dim()],
        }
    }

    /// `-grad U(x) + eps * lift(grad v(pi(x)))`
    pub fn drift_into(&self, epsilon: f64, x: &[f64], out: &mut [f64], ws: &mut DriftWorkspace) -> Result<()> {
        self.potential.gradient(x, out);
        for o in out.iter_mut() {
            *o = -*o;
        }
        if epsilon != 0.0 {
            self.coarse.project_into(x, &mut ws.y);
            self.perturbation.v.gradient(&ws.y, &mut ws.gv);
            self.coarse.lift_into(&ws.gv, &mut ws.lifted);
            for (o, l) in out.iter_mut().zip(&ws.lifted) {
                *o += epsilon * l;
            }
        }
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericDomain { coordinate: i, what: format!("drift component {}", out[i]) });
        }
        Ok(())
    }
}

/// Forced drift at `x`; see [`System::drift_into`].
pub fn drift(system: &System, epsilon: f64, x: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NumericDomain { coordinate: i, what: "state is not finite".into() });
    }
    let mut out = vec![0.0; x.len()];
    system.drift_into(epsilon, x, &mut out, &mut system.workspace())?;
    Ok(out)
}

/// `x + drift dt + scale sqrt(dt) gauss`
pub fn euler_maruyama_step(x: &[f64], drift: &[f64], dt: f64, noise: NoiseScale, gauss: &[f64], out: &mut [f64]) {
    let amp = noise.value() * dt.sqrt();
    for i in 0..x.len() {
        out[i] = x[i] + drift[i] * dt + amp * gauss[i];
    }
}

struct Stepper<'a> {
    system: &'a System,
    dt: f64,
    noise: NoiseScale,
    drift: Vec<f64>,
    next: Vec<f64>,
    ws: DriftWorkspace,
}

impl<'a> Stepper<'a> {
    fn new(system: &'a System, cfg: &SimConfig) -> Self {
        Self {
            system,
            dt: cfg.dt,
            noise: cfg.noise,
            drift: vec![0.0; system.dim()],
            next: vec![0.0; system.dim()],
            ws: system.workspace(),
        }
    }

    fn step(&mut self, epsilon: f64, x: &mut [f64], gauss: &[f64], step: usize) -> Result<()> {
        self.system.drift_into(epsilon, x, &mut self.drift, &mut self.ws)?;
        euler_maruyama_step(x, &self.drift, self.dt, self.noise, gauss, &mut self.next);
        let r2: f64 = self.next.iter().map(|v| v * v).sum();
        if !(r2 <= DIVERGENCE_RADIUS * DIVERGENCE_RADIUS) {
            return Err(Error::Divergence { step, norm: r2.sqrt() });
        }
        x.copy_from_slice(&self.next);
        Ok(())
    }
}

fn fill_gauss(rng: &mut ChaCha8Rng, g: &mut [f64]) {
    for gi in g.iter_mut() {
        *gi = StandardNormal.sample(rng);
    }
}

fn burn_in(system: &System, cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let mut x = vec![0.0; system.dim()];
    let mut g = vec![0.0; system.dim()];
    let mut stepper = Stepper::new(system, cfg);
    for k in 0..cfg.steps_for(cfg.burn_in) {
        fill_gauss(rng, &mut g);
        stepper.step(0.0, &mut x, &g, k)?;
    }
    Ok(x)
}

/// Approximate draw from `exp(-U)`: the unforced dynamics run for `burn_in`
/// from the origin. Distinct seeds give independent draws.
pub fn sample_equilibrium(potential: &Potential, cfg: &SimConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let system = System::new(
        potential.clone(),
        Perturbation::zero(),
        CoarseMap::identity(potential.dim()),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    burn_in(&system, cfg, &mut rng)
}

/// Equilibrium-initialized path of `pi(x_t)` under forcing `cfg.epsilon`,
/// `floor(t_max / dt) + 1` samples. Fully determined by `cfg`.
pub fn simulate(system: &System, cfg: &SimConfig) -> Result<SubsystemTrajectory> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = burn_in(system, cfg, &mut rng)?;
    let steps = cfg.steps_for(cfg.t_max);
    let m = system.coarse.sub_dim();
    let mut samples = Vec::with_capacity((steps + 1) * m);
    let mut y = vec![0.0; m];
    system.coarse.project_into(&x, &mut y);
    samples.extend_from_slice(&y);
    let mut g = vec![0.0; system.dim()];
    let mut stepper = Stepper::new(system, cfg);
    for k in 0..steps {
        fill_gauss(&mut rng, &mut g);
        stepper.step(cfg.epsilon, &mut x, &g, k)?;
        system.coarse.project_into(&x, &mut y);
        samples.extend_from_slice(&y);
    }
    SubsystemTrajectory::new(cfg.dt, m, samples, cfg.epsilon, cfg.seed)
}

/// Unforced and forced paths from the same equilibrium draw, driven by the
/// same Brownian increments. Returns `(unforced, forced)`.
pub fn simulate_coupled(system: &System, cfg: &SimConfig) -> Result<(SubsystemTrajectory, SubsystemTrajectory)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let x0 = burn_in(system, cfg, &mut rng)?;
    let (mut x, mut xf) = (x0.clone(), x0);
    let steps = cfg.steps_for(cfg.t_max);
    let m = system.coarse.sub_dim();
    let mut s0 = Vec::with_capacity((steps + 1) * m);
    let mut s1 = Vec::with_capacity((steps + 1) * m);
    s0.extend(system.coarse.project(&x));
    s1.extend(system.coarse.project(&xf));
    let mut g = vec![0.0; system.dim()];
    let mut st0 = Stepper::new(system, cfg);
    let mut st1 = Stepper::new(system, cfg);
    for k in 0..steps {
        fill_gauss(&mut rng, &mut g);
        st0.step(0.0, &mut x, &g, k)?;
        st1.step(cfg.epsilon, &mut xf, &g, k)?;
        s0.extend(system.coarse.project(&x));
        s1.extend(system.coarse.project(&xf));
    }
    Ok((
        SubsystemTrajectory::new(cfg.dt, m, s0, 0.0, cfg.seed)?,
        SubsystemTrajectory::new(cfg.dt, m, s1, cfg.epsilon, cfg.seed)?,
    ))
}

const ENSEMBLE_CHUNK: usize = 256;

/// Runs `map` on replicates `0..n` in parallel and folds the results with
/// `merge` strictly in replicate order, so the outcome does not depend on
/// the worker count.
pub fn ensemble_reduce<T, F, M>(n: usize, map: F, mut merge: M) -> Result<Option<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
    M: FnMut(&mut T, T),
{
    let mut acc: Option<T> = None;
    let mut start = 0;
    while start < n {
        let end = (start + ENSEMBLE_CHUNK).min(n);
        let part: Vec<Result<T>> = (start..end).into_par_iter().map(&map).collect();
        for r in part {
            let r = r?;
            match acc.as_mut() {
                None => acc = Some(r),
                Some(a) => merge(a, r),
            }
        }
        start = end;
    }
    Ok(acc)
}

/// `cfg.n_traj` trajectories with seeds `cfg.seed ^ i`.
pub fn simulate_ensemble(system: &System, cfg: &SimConfig) -> Result<Vec<SubsystemTrajectory>> {
    let out = ensemble_reduce(
        cfg.n_traj,
        |i| {
            let c = SimConfig { seed: cfg.replicate_seed(i), ..cfg.clone() };
            simulate(system, &c).map(|t| vec![t])
        },
        |a, mut b| a.append(&mut b),
    )?;
    Ok(out.unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::SubsystemFn;

    fn ou1d(v: SubsystemFn) -> System {
        System::new(Potential::harmonic_1d(), Perturbation::new(v), CoarseMap::identity(1)).unwrap()
    }

    #[test]
    fn drift_examples() {
        let s = System::new(Potential::two_timescale(0.1), Perturbation::zero(), CoarseMap::projection(2, vec![0]).unwrap())
            .unwrap();
        assert_eq!(drift(&s, 0.0, &[1.0, 0.0]).unwrap(), vec![-2.0, 0.1]);
        assert_eq!(drift(&s, 0.0, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        let s = ou1d(SubsystemFn::Coordinate(0));
        assert_eq!(drift(&s, 0.5, &[2.0]).unwrap(), vec![-1.5]);
    }

    #[test]
    fn drift_lifts_only_projected_coordinates() {
        let s = System::new(
            Potential::two_timescale(0.1),
            Perturbation::new(SubsystemFn::Coordinate(0)),
            CoarseMap::projection(2, vec![1]).unwrap(),
        )
        .unwrap();
        let d = drift(&s, 1.0, &[0.0, 0.0]).unwrap();
        assert_eq!(d, vec![0.0, 1.0]);
    }

    #[test]
    fn drift_rejects_non_finite() {
        let s = ou1d(SubsystemFn::Zero);
        match drift(&s, 0.0, &[f64::NAN]) {
            Err(Error::NumericDomain { coordinate: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let s = ou1d(SubsystemFn::Monomial { coord: 0, power: -1 });
        assert!(matches!(drift(&s, 1.0, &[0.0]), Err(Error::NumericDomain { .. })));
    }

    #[test]
    fn deterministic_step() {
        let mut out = [0.0; 2];
        euler_maruyama_step(&[0.0, 0.0], &[0.0, 0.0], 0.1, NoiseScale::Sqrt2, &[0.0, 0.0], &mut out);
        assert_eq!(out, [0.0, 0.0]);
        euler_maruyama_step(&[1.0, 1.0], &[-1.0, -1.0], 0.1, NoiseScale::Sqrt2, &[0.0, 0.0], &mut out);
        assert!((out[0] - 0.9).abs() < 1e-15 && (out[1] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn one_step_mean_is_first_order_consistent() {
        // E[x_dt | x_0 = 1] = 1 - dt for U = x^2/2
        let dt = 0.01;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        let mut out = [0.0];
        for _ in 0..n {
            let g: f64 = StandardNormal.sample(&mut rng);
            euler_maruyama_step(&[1.0], &[-1.0], dt, NoiseScale::Sqrt2, &[g], &mut out);
            s += out[0];
            s2 += out[0] * out[0];
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - (1.0 - dt)).abs() < 3.0 * se, "{mean} vs {}", 1.0 - dt);
    }

    #[test]
    fn zero_burn_in_returns_origin() {
        let cfg = SimConfig { burn_in: 0.0, ..Default::default() };
        assert_eq!(sample_equilibrium(&Potential::two_timescale(0.1), &cfg).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn equilibrium_variance_of_harmonic_potential() {
        let n = 10_000;
        let mut s2 = 0.0;
        for i in 0..n {
            let cfg = SimConfig { dt: 0.01, burn_in: 50.0, seed: i, ..Default::default() };
            let x = sample_equilibrium(&Potential::harmonic_1d(), &cfg).unwrap();
            s2 += x[0] * x[0];
        }
        let var = s2 / n as f64;
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn simulate_is_deterministic_and_sized() {
        let s = ou1d(SubsystemFn::Coordinate(0));
        let cfg = SimConfig { dt: 0.01, t_max: 1.0, burn_in: 1.0, epsilon: 0.3, seed: 42, n_traj: 1, ..Default::default() };
        let a = simulate(&s, &cfg).unwrap();
        let b = simulate(&s, &cfg).unwrap();
        assert_eq!(a.len(), 101);
        assert_eq!(a.samples(), b.samples());
        let c = simulate(&s, &SimConfig { seed: 43, ..cfg.clone() }).unwrap();
        assert_ne!(a.samples(), c.samples());
    }

    #[test]
    fn coupled_paths_share_noise() {
        let s = ou1d(SubsystemFn::Coordinate(0));
        let cfg = SimConfig { dt: 0.01, t_max: 2.0, burn_in: 1.0, epsilon: 0.5, seed: 9, ..Default::default() };
        let (u, f) = simulate_coupled(&s, &cfg).unwrap();
        let plain = simulate(&s, &SimConfig { epsilon: 0.0, ..cfg.clone() }).unwrap();
        assert_eq!(u.samples(), plain.samples());
        // linear forcing on OU: the gap obeys d(delta) = (-delta + eps) dt exactly
        let mut delta = 0.0;
        for k in 0..f.len() {
            assert!((f.sample(k)[0] - u.sample(k)[0] - delta).abs() < 1e-12);
            delta += (-delta + 0.5) * 0.01;
        }
    }

    #[test]
    fn divergence_is_reported() {
        let s = ou1d(SubsystemFn::Zero);
        let cfg = SimConfig { dt: 3.0, burn_in: 300.0, ..Default::default() };
        assert!(matches!(simulate(&s, &cfg), Err(Error::Divergence { .. })));
    }

    #[test]
    fn ensemble_matches_individual_runs() {
        let s = ou1d(SubsystemFn::Zero);
        let cfg = SimConfig { dt: 0.01, t_max: 0.5, burn_in: 0.5, seed: 100, n_traj: 5, ..Default::default() };
        let ens = simulate_ensemble(&s, &cfg).unwrap();
        assert_eq!(ens.len(), 5);
        for (i, t) in ens.iter().enumerate() {
            let single = simulate(&s, &SimConfig { seed: 100 ^ i as u64, ..cfg.clone() }).unwrap();
            assert_eq!(t.samples(), single.samples());
        }
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig { dt: 0.0, ..Default::default() }.validate().is_err());
        assert!(SimConfig { n_traj: 0, ..Default::default() }.validate().is_err());
        assert!(SimConfig { burn_in: -1.0, ..Default::default() }.validate().is_err());
    }
}
