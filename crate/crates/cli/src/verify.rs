//! The oracle cross-check suite behind `oracle-verify`.

use anyhow::Result;
use response_forecast::chain::COUPLING_TOL;
use response_forecast::dynamics::Perturbation;
use response_forecast::oracle::{
    dyson_residual, grid_subsystem_gap, lowest_eigenpairs, oracle_sweep, quadrature_norms, OracleRow, ResponseOracle,
    Testbed, DEFAULT_EIGENPAIRS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum TestbedArg {
    Ou1d,
    Ou2d,
    Multiwell,
}

impl TestbedArg {
    pub fn testbed(self) -> Testbed {
        match self {
            Self::Ou1d => Testbed::Ou1d,
            Self::Ou2d => Testbed::Ou2d,
            Self::Multiwell => Testbed::Multiwell { axis: 0 },
        }
    }
}

/// Time step, horizons and tolerances for one testbed.
#[derive(Clone, Debug)]
pub struct VerifyPlan {
    pub tau: f64,
    pub ts: Vec<f64>,
    /// Finite differences only up to this horizon (they cost five forced solves each).
    pub fd_up_to: f64,
    pub dyson_t: f64,
    pub d1_tol: f64,
    pub d2_tol: f64,
    pub dyson_tol: f64,
    pub decomposition_tol: f64,
}

impl VerifyPlan {
    pub fn for_testbed(t: TestbedArg) -> Self {
        let base = Self {
            tau: 1.0 / 64.0,
            ts: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            fd_up_to: 4.0,
            dyson_t: 1.0,
            d1_tol: 1e-6,
            d2_tol: 1e-5,
            dyson_tol: 1e-5,
            decomposition_tol: 1e-8,
        };
        match t {
            TestbedArg::Ou1d => base,
            TestbedArg::Ou2d => Self { ts: vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0], ..base },
            // the stiff 192^2 grid: coarser time step, looser quadrature identity
            TestbedArg::Multiwell => {
                Self { tau: 1.0 / 32.0, fd_up_to: 1.0, dyson_t: 0.5, decomposition_tol: 1e-6, ..base }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
}

impl Check {
    pub fn pass(&self) -> bool {
        self.value <= self.tol
    }
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub testbed: &'static str,
    pub grid_points: usize,
    pub lambda_pi: f64,
    pub rows: Vec<OracleRow>,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(Check::pass)
    }
}

/// Runs every identity on `arg`'s grid (refined `refine` times); with
/// `zero_perturbation` the forcing is removed.
pub fn verify(arg: TestbedArg, refine: u32, zero_perturbation: bool) -> Result<VerifyReport> {
    let plan = VerifyPlan::for_testbed(arg);
    let mut setup = arg.testbed().setup()?;
    for _ in 0..refine {
        setup.spec = setup.spec.refined();
    }
    if zero_perturbation {
        setup.perturbation = Perturbation::zero();
    }
    let op = setup.discretize()?;
    let spectrum = lowest_eigenpairs(&op, DEFAULT_EIGENPAIRS)?;
    let lambda_pi = grid_subsystem_gap(&op, &spectrum, COUPLING_TOL).lambda_pi.value();
    let t_max = plan.ts.iter().copied().fold(0.0, f64::max);
    let steps = (t_max / plan.tau).round() as usize;
    let mut oracle = ResponseOracle::new(&op, &setup.kappa, plan.tau, steps)?;
    let norms = quadrature_norms(&op, &setup.kappa);

    let (fd_ts, rest): (Vec<f64>, Vec<f64>) = plan.ts.iter().partition(|&&t| t <= plan.fd_up_to);
    let mut rows = oracle_sweep(&op, &oracle, &setup.kappa, &norms, lambda_pi, &fd_ts, true)?;
    rows.extend(oracle_sweep(&op, &oracle, &setup.kappa, &norms, lambda_pi, &rest, false)?);

    let mut checks = Vec::new();
    let mut worst = |name: &str, tol: f64, vals: &mut dyn Iterator<Item = f64>| {
        let value = vals.fold(0.0, f64::max);
        checks.push(Check { name: name.into(), value, tol });
    };
    worst("|d1_fd - d1_lemma|", plan.d1_tol, &mut rows.iter().filter(|r| !r.d1_fd.is_nan()).map(|r| (r.d1_fd - r.d1_lemma).abs()));
    worst("|d2_fd - d2_exact|", plan.d2_tol, &mut rows.iter().filter(|r| !r.d2_fd.is_nan()).map(|r| (r.d2_fd - r.d2_exact).abs()));
    worst("|exact - approx - (fV + fk)|", plan.decomposition_tol, &mut rows.iter().map(|r| r.decomposition_residual().abs()));
    worst("max(|fV + fk| - bound, 0)", 0.0, &mut rows.iter().map(|r| ((r.f_v + r.f_k).abs() - r.bound).max(0.0)));

    let mut g1 = Vec::new();
    let mut g2 = Vec::new();
    for r in &rows {
        let (d1, d2) = oracle.general_protocol(&|_| 1.0, r.t)?;
        g1.push((d1 - r.d1_lemma).abs());
        g2.push((d2 - r.d2_exact).abs());
    }
    worst("|general(h=1) d1 - lemma|", plan.d1_tol, &mut g1.into_iter());
    worst("|general(h=1) d2 - exact|", plan.d2_tol, &mut g2.into_iter());

    let g = op.lift(&setup.kappa);
    let dyson = dyson_residual(&op, 0.2, plan.dyson_t, &g, 64)?;
    checks.push(Check { name: "dyson residual (eps 0.2)".into(), value: dyson, tol: plan.dyson_tol });

    Ok(VerifyReport { testbed: setup.name, grid_points: op.len(), lambda_pi, rows, checks })
}
