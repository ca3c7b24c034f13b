//! Run configuration: a TOML file whose every key has a default, so an
//! empty file (or none) reproduces the reference experiments.

use std::path::{Path, PathBuf};

use response_forecast::dynamics::{MultiwellParams, NoiseScale, SimConfig};
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ExperimentKind {
    Ou,
    Multiwell,
    ChainExample,
}

/// Problems with the configuration itself; reported with exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub epsilon: f64,
    /// Horizons; the default depends on the experiment.
    pub t_grid: Option<Vec<f64>>,
    pub output_dir: PathBuf,
    pub sim: SimSection,
    pub ou: OuSection,
    pub multiwell: MultiwellSection,
    pub oracle: OracleSection,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    pub burn_in: f64,
    pub seed: u64,
    pub n_traj: usize,
    /// Length of each equilibrium trajectory used for the correlators; the
    /// averages are taken along the whole path, not only up to `max(T)`.
    pub trajectory_length: f64,
    /// `"sqrt2"` or `"unit"`.
    pub noise: String,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OuSection {
    pub r: f64,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct MultiwellSection {
    pub sigma: f64,
    pub sigma_m: f64,
    pub sigma_1: f64,
    pub sigma_2: f64,
    pub confinement: f64,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    /// Time step of the oracle's semigroup series; every horizon must be a
    /// multiple of `4 tau`.
    pub tau: f64,
    pub eigenpairs: usize,
    /// Points per axis of the multiwell grid.
    pub multiwell_n: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            t_grid: None,
            output_dir: PathBuf::from("out"),
            sim: SimSection::default(),
            ou: OuSection::default(),
            multiwell: MultiwellSection::default(),
            oracle: OracleSection::default(),
        }
    }
}

impl Default for SimSection {
    fn default() -> Self {
        let d = SimConfig::default();
        Self { dt: d.dt, burn_in: d.burn_in, seed: d.seed, n_traj: d.n_traj, trajectory_length: 100.0, noise: "sqrt2".into() }
    }
}

impl Default for OuSection {
    fn default() -> Self {
        Self { r: 0.1 }
    }
}

impl Default for MultiwellSection {
    fn default() -> Self {
        let p = MultiwellParams::default();
        Self { sigma: p.sigma, sigma_m: p.sigma_m, sigma_1: p.sigma_1, sigma_2: p.sigma_2, confinement: p.confinement }
    }
}

impl Default for OracleSection {
    fn default() -> Self {
        Self { tau: 1.0 / 16.0, eigenpairs: 50, multiwell_n: 192 }
    }
}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text).map_err(|e| err(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`, or the defaults when `None`.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| err(format!("cannot read {}: {e}", p.display())))?;
                Self::parse(&text)
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.epsilon.is_finite() {
            return Err(err("epsilon must be finite"));
        }
        if let Some(ts) = &self.t_grid {
            if ts.is_empty() {
                return Err(err("t_grid must not be empty"));
            }
            if ts.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                return Err(err("t_grid entries must be finite and >= 0"));
            }
            if ts.windows(2).any(|w| w[1] <= w[0]) {
                return Err(err("t_grid must be strictly increasing"));
            }
        }
        let s = &self.sim;
        if !(s.dt > 0.0 && s.dt.is_finite()) {
            return Err(err("sim.dt must be positive"));
        }
        if !(s.burn_in >= 0.0) {
            return Err(err("sim.burn_in must be >= 0"));
        }
        if !(s.trajectory_length > 0.0 && s.trajectory_length.is_finite()) {
            return Err(err("sim.trajectory_length must be positive"));
        }
        if s.n_traj == 0 {
            return Err(err("sim.n_traj must be >= 1"));
        }
        self.noise()?;
        if !(self.ou.r > 0.0 && self.ou.r < 4.0) {
            return Err(err("ou.r must lie in (0, 4)"));
        }
        let m = &self.multiwell;
        for (k, v) in [("sigma", m.sigma), ("sigma_m", m.sigma_m), ("sigma_1", m.sigma_1), ("sigma_2", m.sigma_2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(err(format!("multiwell.{k} must be positive")));
            }
        }
        if !(m.confinement > 0.0) {
            return Err(err("multiwell.confinement must be positive"));
        }
        if !(self.oracle.tau > 0.0) {
            return Err(err("oracle.tau must be positive"));
        }
        if self.oracle.multiwell_n < 16 {
            return Err(err("oracle.multiwell_n must be >= 16"));
        }
        if self.oracle.eigenpairs < 2 {
            return Err(err("oracle.eigenpairs must be >= 2"));
        }
        Ok(())
    }

    pub fn noise(&self) -> Result<NoiseScale, ConfigError> {
        match self.sim.noise.as_str() {
            "sqrt2" => Ok(NoiseScale::Sqrt2),
            "unit" => Ok(NoiseScale::Unit),
            other => Err(err(format!("sim.noise must be \"sqrt2\" or \"unit\", got {other:?}"))),
        }
    }

    /// Simulation settings reaching to the largest horizon.
    pub fn sim_config(&self, epsilon: f64, t_max: f64) -> SimConfig {
        SimConfig {
            dt: self.sim.dt,
            t_max,
            burn_in: self.sim.burn_in,
            epsilon,
            seed: self.sim.seed,
            n_traj: self.sim.n_traj,
            noise: self.noise().expect("validated"),
        }
    }

    pub fn multiwell_params(&self) -> MultiwellParams {
        let m = &self.multiwell;
        MultiwellParams {
            sigma: m.sigma,
            sigma_m: m.sigma_m,
            sigma_1: m.sigma_1,
            sigma_2: m.sigma_2,
            confinement: m.confinement,
        }
    }

    pub fn t_grid(&self, kind: ExperimentKind) -> Vec<f64> {
        if let Some(ts) = &self.t_grid {
            return ts.clone();
        }
        match kind {
            ExperimentKind::Multiwell => {
                vec![0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 15.0, 20.0]
            }
            _ => (0..=20).map(|i| i as f64 * 0.5).collect(),
        }
    }
}
