use std::f64::consts::FRAC_PI_4;

use super::{discretize, GridOperator, GridSpec};
use crate::dynamics::{CoarseMap, MultiwellParams, Perturbation, Potential, SubsystemFn};
use crate::error::Result;

/// Tail threshold for the multiwell box: [-3.5, 3.5]^2 leaves about 2.5e-3
/// of the equilibrium mass outside.
pub const MULTIWELL_TAIL_TOL: f64 = 1e-2;

/// The reference systems the oracle is checked on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Testbed {
    /// `U = y^2/2`, `v = -cos(y - pi/4)`, `kappa = y`.
    Ou1d,
    /// Two-timescale OU with `r = 0.1`, observed through `x1`.
    Ou2d,
    /// Multiwell landscape observed through coordinate `axis`,
    /// `v = exp(-(y - 1)^2 / 4)`, `kappa = y`.
    Multiwell { axis: usize },
}

#[derive(Clone, Debug)]
pub struct TestbedSetup {
    pub name: &'static str,
    pub potential: Potential,
    pub perturbation: Perturbation,
    pub coarse: CoarseMap,
    pub kappa: SubsystemFn,
    pub spec: GridSpec,
}

impl TestbedSetup {
    pub fn discretize(&self) -> Result<GridOperator> {
        discretize(&self.potential, &self.perturbation, &self.coarse, &self.spec)
    }

    /// Same system with the perturbation removed.
    pub fn unforced(mut self) -> Self {
        self.perturbation = Perturbation::zero();
        self
    }
}

pub fn cosine_perturbation() -> SubsystemFn {
    SubsystemFn::Cosine { coord: 0, amplitude: -1.0, shift: FRAC_PI_4 }
}

pub fn multiwell_perturbation() -> SubsystemFn {
    SubsystemFn::GaussianBump { coord: 0, amplitude: 1.0, center: 1.0, scale: 4.0 }
}

impl Testbed {
    pub fn name(self) -> &'static str {
        match self {
            Testbed::Ou1d => "ou1d",
            Testbed::Ou2d => "ou2d",
            Testbed::Multiwell { axis: 0 } => "multiwell",
            Testbed::Multiwell { .. } => "multiwell-y",
        }
    }

    pub fn setup(self) -> Result<TestbedSetup> {
        Ok(match self {
            Testbed::Ou1d => TestbedSetup {
                name: self.name(),
                potential: Potential::harmonic_1d(),
                perturbation: Perturbation::new(cosine_perturbation()),
                coarse: CoarseMap::identity(1),
                kappa: SubsystemFn::Coordinate(0),
                spec: GridSpec::uniform_1d(-8.0, 8.0, 512)?,
            },
            Testbed::Ou2d => TestbedSetup {
                name: self.name(),
                potential: Potential::two_timescale(0.1),
                perturbation: Perturbation::new(cosine_perturbation()),
                coarse: CoarseMap::projection(2, vec![0])?,
                kappa: SubsystemFn::Coordinate(0),
                spec: GridSpec::new(vec![-5.0, -15.0], vec![5.0, 15.0], vec![80, 120])?,
            },
            Testbed::Multiwell { axis } => TestbedSetup {
                name: self.name(),
                potential: Potential::multiwell(&MultiwellParams::default()),
                perturbation: Perturbation::new(multiwell_perturbation()),
                coarse: CoarseMap::projection(2, vec![axis])?,
                kappa: SubsystemFn::Coordinate(0),
                spec: GridSpec::new(vec![-3.5, -3.5], vec![3.5, 3.5], vec![192, 192])?.with_tail_tol(MULTIWELL_TAIL_TOL),
            },
        })
    }
}
