//! End-to-end pipelines: equilibrium ensemble → correlators → prediction,
//! compared against a directly forced ensemble and, where available, the
//! grid oracle.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use response_forecast::chain::{
    subsystem_gap_from_pairs, subsystem_spectral_gap, verify_decay_with, DecayReport, GeneratorMatrix, SpectralReport,
    StatePartition, COUPLING_TOL,
};
use response_forecast::correlators::{CorrelatorAccumulator, CorrelatorSet, Observable};
use response_forecast::dynamics::{
    ensemble_reduce, simulate, simulate_coupled, CoarseMap, Perturbation, Potential, SimConfig, SubsystemFn, System,
};
use response_forecast::oracle::{
    cosine_perturbation, grid_partition, lowest_eigenpairs, multiwell_perturbation, oracle_sweep, quadrature_norms,
    GridOperator, GridSpec, OracleRow, ResponseOracle, Testbed, TestbedSetup,
};
use response_forecast::response::{ou_bound, ou_constant, ou_gap, predict, ResponseEstimate};

use crate::config::{Config, ExperimentKind};
use crate::svg::{self, Band, LinePlot, Series, PALETTE};

/// Seed stream of the forced ensemble, disjoint from the equilibrium
/// replicates `seed ^ i`.
pub const DIRECT_STREAM: u64 = 1 << 63;

pub const EXAMPLE_CHAIN: &str = include_str!("../data/example1.chain");

/// A simulated system together with its observable and perturbation.
#[derive(Clone, Debug)]
pub struct Setup {
    pub system: System,
    pub kappa: Observable,
    pub v: Observable,
}

pub fn ou_setup(cfg: &Config) -> Result<Setup> {
    let v = cosine_perturbation();
    Ok(Setup {
        system: System::new(
            Potential::two_timescale(cfg.ou.r),
            Perturbation::new(v.clone()),
            CoarseMap::projection(2, vec![0])?,
        )?,
        kappa: Observable::new("y", 1, SubsystemFn::Coordinate(0))?,
        v: Observable::new("v", 1, v)?,
    })
}

pub fn multiwell_setup(cfg: &Config) -> Result<Setup> {
    let v = multiwell_perturbation();
    Ok(Setup {
        system: System::new(
            Potential::multiwell(&cfg.multiwell_params()),
            Perturbation::new(v.clone()),
            CoarseMap::projection(2, vec![0])?,
        )?,
        kappa: Observable::new("x", 1, SubsystemFn::Coordinate(0))?,
        v: Observable::new("v", 1, v)?,
    })
}

pub fn setup_for(cfg: &Config, kind: ExperimentKind) -> Result<Setup> {
    match kind {
        ExperimentKind::Multiwell => multiwell_setup(cfg),
        _ => ou_setup(cfg),
    }
}

/// Correlator sets at every horizon in `ts` from `sim.n_traj` equilibrium
/// trajectories of length `length`, streamed so no trajectory is kept.
pub fn equilibrium_correlators(setup: &Setup, sim: &SimConfig, length: f64, ts: &[f64]) -> Result<Vec<CorrelatorSet>> {
    let t_max = ts.iter().copied().fold(length, f64::max);
    let sim = SimConfig { epsilon: 0.0, t_max, ..sim.clone() };
    let len = sim.steps_for(t_max) + 1;
    let proto = CorrelatorAccumulator::new(setup.kappa.clone(), setup.v.clone(), sim.dt, ts, &vec![len; sim.n_traj])?;
    let acc = ensemble_reduce(
        sim.n_traj,
        |i| {
            let traj = simulate(&setup.system, &SimConfig { seed: sim.replicate_seed(i), ..sim.clone() })?;
            let mut one = proto.fork();
            one.push(&traj)?;
            Ok(one)
        },
        |a, b| a.merge(&b),
    )?
    .expect("at least one trajectory");
    Ok(acc.finish()?)
}

/// Running sums for a sample mean and its standard error.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: f64,
    sum: f64,
    sum2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        self.sum += x;
        self.sum2 += x * x;
    }

    fn merge(&mut self, o: &Self) {
        self.n += o.n;
        self.sum += o.sum;
        self.sum2 += o.sum2;
    }

    fn mean_se(&self) -> (f64, f64) {
        let m = self.sum / self.n;
        if self.n < 2.0 {
            return (m, f64::NAN);
        }
        let var = ((self.sum2 - self.n * m * m) / (self.n - 1.0)).max(0.0);
        (m, (var / self.n).sqrt())
    }
}

/// Direct estimate of the forced response at one horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectPoint {
    pub t: f64,
    /// `E[k(x_T^eps)]`
    pub forced: f64,
    pub forced_se: f64,
    /// `E[k(x_T^eps) - k(x_T^0)]` from paths sharing noise and start.
    pub increment: f64,
    pub increment_se: f64,
}

/// Forced and unforced paths from common equilibrium starts and noise, on a
/// seed stream disjoint from [`equilibrium_correlators`].
pub fn direct_response(setup: &Setup, sim: &SimConfig, ts: &[f64]) -> Result<Vec<DirectPoint>> {
    let t_max = ts.iter().copied().fold(0.0, f64::max);
    let sim = SimConfig { t_max, seed: sim.seed ^ DIRECT_STREAM, ..sim.clone() };
    let idx: Vec<usize> = ts.iter().map(|&t| sim.steps_for(t)).collect();
    let sums = ensemble_reduce(
        sim.n_traj,
        |i| {
            let (free, forced) = simulate_coupled(&setup.system, &SimConfig { seed: sim.replicate_seed(i), ..sim.clone() })?;
            let mut m = vec![(Moments::default(), Moments::default()); idx.len()];
            for (slot, &j) in m.iter_mut().zip(&idx) {
                let kf = setup.kappa.eval(forced.sample(j));
                let k0 = setup.kappa.eval(free.sample(j));
                slot.0.push(kf);
                slot.1.push(kf - k0);
            }
            Ok(m)
        },
        |a, b| {
            for (x, y) in a.iter_mut().zip(&b) {
                x.0.merge(&y.0);
                x.1.merge(&y.1);
            }
        },
    )?
    .expect("at least one trajectory");
    Ok(ts
        .iter()
        .zip(&sums)
        .map(|(&t, (f, d))| {
            let (forced, forced_se) = f.mean_se();
            let (increment, increment_se) = d.mean_se();
            DirectPoint { t, forced, forced_se, increment, increment_se }
        })
        .collect())
}

/// Prediction and direct simulation side by side.
#[derive(Clone, Debug)]
pub struct ResponseRow {
    pub estimate: ResponseEstimate,
    pub direct: DirectPoint,
}

impl ResponseRow {
    pub fn first_increment(&self) -> f64 {
        self.estimate.epsilon * self.estimate.order1
    }

    pub fn second_increment(&self) -> f64 {
        let e = self.estimate.epsilon;
        e * self.estimate.order1 + 0.5 * e * e * self.estimate.order2
    }
}

/// Mean absolute deviation from the direct increments over `T > 0`, for the
/// first- and second-order predictions.
pub fn time_averaged_deviation(rows: &[ResponseRow]) -> (f64, f64) {
    let live: Vec<&ResponseRow> = rows.iter().filter(|r| r.estimate.t > 0.0).collect();
    if live.is_empty() {
        return (0.0, 0.0);
    }
    let n = live.len() as f64;
    let d1 = live.iter().map(|r| (r.direct.increment - r.first_increment()).abs()).sum::<f64>() / n;
    let d2 = live.iter().map(|r| (r.direct.increment - r.second_increment()).abs()).sum::<f64>() / n;
    (d1, d2)
}

pub fn write_rows_csv<W: Write>(rows: &[ResponseRow], mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "T,order0,order1,order2,se1,se2,epsilon,first_order,prediction,bound,band,direct,direct_se,increment,increment_se"
    )?;
    for r in rows {
        let e = &r.estimate;
        let opt = |x: Option<f64>| x.map(|b| format!("{b:.10e}")).unwrap_or_default();
        writeln!(
            w,
            "{},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{},{:.10e},{:.10e},{},{},{:.10e},{:.10e},{:.10e},{:.10e}",
            e.t,
            e.order0,
            e.order1,
            e.order2,
            e.se1,
            e.se2,
            e.epsilon,
            e.first_order_prediction(),
            e.prediction,
            opt(e.bound),
            opt(e.prediction_band()),
            r.direct.forced,
            r.direct.forced_se,
            r.direct.increment,
            r.direct.increment_se
        )?;
    }
    Ok(())
}

pub fn write_correlators_csv<W: Write>(sets: &[CorrelatorSet], mut w: W) -> std::io::Result<()> {
    writeln!(w, "T,name,value,se")?;
    for c in sets {
        for (name, e) in response_forecast::correlators::CORRELATOR_NAMES.iter().zip(c.entries()) {
            writeln!(w, "{},{name},{:.12e},{:.12e}", c.t, e.mean, e.se)?;
        }
    }
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let p = dir.join(name);
    Ok(BufWriter::new(File::create(&p).with_context(|| format!("creating {}", p.display()))?))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    let mut f = create(dir, name)?;
    f.write_all(text.as_bytes())?;
    f.flush()?;
    Ok(())
}

/// The response figure: direct increments, both predictions, the band.
fn response_plot(title: &str, rows: &[ResponseRow], extra: Vec<Series>) -> String {
    let ts: Vec<f64> = rows.iter().map(|r| r.estimate.t).collect();
    let mut p = LinePlot::new(title, "T", "E[k(x_T)] - <k>");
    if rows.iter().all(|r| r.estimate.bound.is_some()) {
        p.bands.push(Band {
            name: "second order ± bound".into(),
            x: ts.clone(),
            lower: rows.iter().map(|r| r.second_increment() - r.estimate.prediction_band().unwrap()).collect(),
            upper: rows.iter().map(|r| r.second_increment() + r.estimate.prediction_band().unwrap()).collect(),
            color: PALETTE[1].into(),
        });
    }
    p.series.push(Series::new("direct simulation", rows.iter().map(|r| (r.estimate.t, r.direct.increment)).collect(), PALETTE[0]));
    p.series.push(Series::new("first order", rows.iter().map(|r| (r.estimate.t, r.first_increment())).collect(), PALETTE[2]).dashed());
    p.series.push(Series::new("second order", rows.iter().map(|r| (r.estimate.t, r.second_increment())).collect(), PALETTE[1]));
    p.series.extend(extra);
    p.render()
}

#[derive(Clone, Debug)]
pub struct OuReport {
    pub lambda: f64,
    pub constant: f64,
    pub correlators: Vec<CorrelatorSet>,
    pub rows: Vec<ResponseRow>,
    pub deviation_first: f64,
    pub deviation_second: f64,
}

fn assemble_rows(
    correlators: &[CorrelatorSet],
    direct: &[DirectPoint],
    epsilon: f64,
    bound: impl Fn(f64) -> Result<f64>,
) -> Result<Vec<ResponseRow>> {
    correlators
        .iter()
        .zip(direct)
        .map(|(c, d)| Ok(ResponseRow { estimate: predict(c, epsilon).with_bound(bound(c.t)?), direct: *d }))
        .collect()
}

/// The two-timescale OU experiment. Writes `ou_response.csv`,
/// `ou_correlators.csv` and `ou_response.svg` when `out` is given.
pub fn run_ou(cfg: &Config, out: Option<&Path>) -> Result<OuReport> {
    let setup = ou_setup(cfg)?;
    let ts = cfg.t_grid(ExperimentKind::Ou);
    let t_max = ts.iter().copied().fold(0.0, f64::max);
    let sim = cfg.sim_config(cfg.epsilon, t_max);
    let correlators = equilibrium_correlators(&setup, &sim, cfg.sim.trajectory_length, &ts)?;
    let direct = direct_response(&setup, &sim, &ts)?;
    let r = cfg.ou.r;
    let rows = assemble_rows(&correlators, &direct, cfg.epsilon, |t| Ok(ou_bound(r, t)?))?;
    let (deviation_first, deviation_second) = time_averaged_deviation(&rows);
    let report = OuReport {
        lambda: ou_gap(r),
        constant: ou_constant(r)?,
        correlators,
        rows,
        deviation_first,
        deviation_second,
    };
    if let Some(dir) = out {
        let mut f = create(dir, "ou_response.csv")?;
        write_rows_csv(&report.rows, &mut f)?;
        f.flush()?;
        let mut f = create(dir, "ou_correlators.csv")?;
        write_correlators_csv(&report.correlators, &mut f)?;
        f.flush()?;
        let title = format!("Two-timescale OU, r = {r}, eps = {}", cfg.epsilon);
        write_text(dir, "ou_response.svg", &response_plot(&title, &report.rows, vec![]))?;
    }
    Ok(report)
}

/// Grid-oracle results for one projection of the multiwell landscape.
#[derive(Clone, Debug)]
pub struct MultiwellOracle {
    pub lambda_star: f64,
    pub lambda_pi_x: f64,
    pub lambda_pi_y: f64,
    /// Coupling of the slowest nonzero mode to each projection.
    pub slow_coupling_x: f64,
    pub slow_coupling_y: f64,
    pub mean_k: f64,
    pub rows: Vec<OracleRow>,
}

pub fn multiwell_testbed(cfg: &Config, axis: usize) -> Result<TestbedSetup> {
    let mut tb = Testbed::Multiwell { axis }.setup()?;
    tb.potential = Potential::multiwell(&cfg.multiwell_params());
    if cfg.oracle.multiwell_n != tb.spec.n[0] {
        let n = cfg.oracle.multiwell_n;
        tb.spec = GridSpec::new(tb.spec.lo.clone(), tb.spec.hi.clone(), vec![n, n])?.with_tail_tol(tb.spec.tail_tol);
    }
    Ok(tb)
}

/// λ_π for both coordinate projections (one eigen solve) and the oracle
/// sweep of the x-projection over `ts`.
pub fn multiwell_oracle(cfg: &Config, ts: &[f64]) -> Result<MultiwellOracle> {
    let tb = multiwell_testbed(cfg, 0)?;
    let op = tb.discretize()?;
    let op_y = multiwell_testbed(cfg, 1)?.discretize()?;
    let spec = lowest_eigenpairs(&op, cfg.oracle.eigenpairs)?;
    let gap = |o: &GridOperator| {
        subsystem_gap_from_pairs(&spec.values, &spec.vectors, o.mu(), &grid_partition(o), COUPLING_TOL)
    };
    let (gx, gy) = (gap(&op), gap(&op_y));
    let slow = |g: &response_forecast::chain::SubsystemGap| {
        g.groups.iter().find(|e| !e.is_zero).map(|e| e.coupling).unwrap_or(f64::NAN)
    };
    let lambda_star = gx.groups.iter().find(|e| !e.is_zero).map(|e| e.lambda).unwrap_or(f64::INFINITY);
    let t_max = ts.iter().copied().fold(0.0, f64::max);
    let steps = (t_max / cfg.oracle.tau).round() as usize;
    let oracle = ResponseOracle::new(&op, &tb.kappa, cfg.oracle.tau, steps.max(1))?;
    let norms = quadrature_norms(&op, &tb.kappa);
    let rows = oracle_sweep(&op, &oracle, &tb.kappa, &norms, gx.lambda_pi.value(), ts, false)?;
    Ok(MultiwellOracle {
        lambda_star,
        lambda_pi_x: gx.lambda_pi.value(),
        lambda_pi_y: gy.lambda_pi.value(),
        slow_coupling_x: slow(&gx),
        slow_coupling_y: slow(&gy),
        mean_k: op.mean(&op.lift(&tb.kappa)),
        rows,
    })
}

#[derive(Clone, Debug)]
pub struct MultiwellReport {
    pub oracle: Option<MultiwellOracle>,
    pub correlators: Vec<CorrelatorSet>,
    pub rows: Vec<ResponseRow>,
    pub deviation_first: f64,
    pub deviation_second: f64,
}

fn potential_heat_map(cfg: &Config) -> String {
    let pot = Potential::multiwell(&cfg.multiwell_params());
    let n = 141;
    let axis: Vec<f64> = (0..n).map(|i| -3.5 + 7.0 * i as f64 / (n - 1) as f64).collect();
    let mut vals = Vec::with_capacity(n * n);
    for y in &axis {
        for x in &axis {
            vals.push(pot.energy(&[*x, *y]));
        }
    }
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    svg::heat_map("Multiwell potential U(x, y)", "x", "y", &axis, &axis, &vals, lo + 8.0)
}

/// The multiwell experiment: Monte Carlo pipeline plus, unless
/// `with_oracle` is false, the grid oracle for the exact second order and
/// the remainder bound.
pub fn run_multiwell(cfg: &Config, out: Option<&Path>, with_oracle: bool) -> Result<MultiwellReport> {
    let setup = multiwell_setup(cfg)?;
    let ts = cfg.t_grid(ExperimentKind::Multiwell);
    let t_max = ts.iter().copied().fold(0.0, f64::max);
    let oracle = if with_oracle { Some(multiwell_oracle(cfg, &ts)?) } else { None };
    let sim = cfg.sim_config(cfg.epsilon, t_max);
    let correlators = equilibrium_correlators(&setup, &sim, cfg.sim.trajectory_length, &ts)?;
    let direct = direct_response(&setup, &sim, &ts)?;
    let rows = match &oracle {
        Some(o) => {
            let bounds: Vec<f64> = o.rows.iter().map(|r| r.bound).collect();
            assemble_rows(&correlators, &direct, cfg.epsilon, |t| {
                Ok(ts.iter().position(|&s| s == t).map(|i| bounds[i]).unwrap_or(f64::NAN))
            })?
        }
        None => correlators
            .iter()
            .zip(&direct)
            .map(|(c, d)| ResponseRow { estimate: predict(c, cfg.epsilon), direct: *d })
            .collect(),
    };
    let (deviation_first, deviation_second) = time_averaged_deviation(&rows);
    let report = MultiwellReport { oracle, correlators, rows, deviation_first, deviation_second };
    if let Some(dir) = out {
        let mut f = create(dir, "multiwell_response.csv")?;
        write_rows_csv(&report.rows, &mut f)?;
        f.flush()?;
        let mut f = create(dir, "multiwell_correlators.csv")?;
        write_correlators_csv(&report.correlators, &mut f)?;
        f.flush()?;
        let mut extra = vec![];
        if let Some(o) = &report.oracle {
            let mut f = create(dir, "multiwell_oracle.csv")?;
            response_forecast::oracle::write_oracle_csv(&o.rows, &mut f)?;
            f.flush()?;
            let e = cfg.epsilon;
            extra.push(
                Series::new(
                    "grid oracle, exact second order",
                    o.rows.iter().map(|r| (r.t, e * r.d1_lemma + 0.5 * e * e * r.d2_exact)).collect(),
                    PALETTE[3],
                )
                .dashed(),
            );
            let mut p = LinePlot::new("Multiwell second-order coefficient (grid oracle)", "T", "coefficient");
            p.series.push(Series::new("exact", o.rows.iter().map(|r| (r.t, r.d2_exact)).collect(), PALETTE[0]));
            p.series.push(Series::new("approximation", o.rows.iter().map(|r| (r.t, r.d2_approx)).collect(), PALETTE[1]));
            p.series.push(
                Series::new("exact - approximation", o.rows.iter().map(|r| (r.t, r.d2_exact - r.d2_approx)).collect(), PALETTE[2])
                    .dashed(),
            );
            write_text(dir, "multiwell_oracle.svg", &p.render())?;
        }
        let title = format!("Multiwell, x-projection, eps = {}", cfg.epsilon);
        write_text(dir, "multiwell_response.svg", &response_plot(&title, &report.rows, extra))?;
        write_text(dir, "multiwell_potential.svg", &potential_heat_map(cfg))?;
    }
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct ChainReport {
    pub spectral: SpectralReport,
    pub partition: StatePartition,
    pub decay: DecayReport,
}

pub fn chain_report(gen: &GeneratorMatrix, part: &StatePartition, tol: f64) -> Result<SpectralReport> {
    Ok(subsystem_spectral_gap(gen, part, tol)?)
}

pub fn write_spectral_csv(report: &SpectralReport, dir: &Path, name: &str) -> Result<()> {
    let mut f = create(dir, name)?;
    report.subsystem.as_ref().expect("subsystem computed").write_csv(&report.eigenvalues, &mut f)?;
    f.flush()?;
    Ok(())
}

/// The bundled four-state chain: spectrum, coupling table, and the decay
/// inequality for the subsystem observable `(1, -1, -1, 1)`.
pub fn run_chain_example(out: Option<&Path>) -> Result<ChainReport> {
    let (gen, part) = GeneratorMatrix::parse(EXAMPLE_CHAIN)?;
    let spectral = chain_report(&gen, &part, COUPLING_TOL)?;
    let f: Vec<f64> = (0..gen.n()).map(|i| if part.class_of(i) == part.class_of(0) { 1.0 } else { -1.0 }).collect();
    let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
    let decay = verify_decay_with(&spectral, &part, &f, &times)?;
    if let Some(dir) = out {
        write_spectral_csv(&spectral, dir, "chain_spectrum.csv")?;
        let mut w = create(dir, "chain_decay.csv")?;
        writeln!(w, "t,lhs,rhs,holds")?;
        for r in &decay.rows {
            writeln!(w, "{},{:.12e},{:.12e},{}", r.t, r.lhs, r.rhs, r.holds)?;
        }
        w.flush()?;
        let mut p = LinePlot::new("Example chain: subsystem decay", "t", "<(P_t f)^2>");
        p.series.push(Series::new("<(P_t f)^2>", decay.rows.iter().map(|r| (r.t, r.lhs)).collect(), PALETTE[0]));
        p.series.push(
            Series::new("exp(-2 lambda_pi t) <f^2>", decay.rows.iter().map(|r| (r.t, r.rhs)).collect(), PALETTE[1]).dashed(),
        );
        write_text(dir, "chain_decay.svg", &p.render())?;
    }
    Ok(ChainReport { spectral, partition: part, decay })
}

/// Grid-oracle correlators for the OU experiment's system, used to check
/// the Monte Carlo estimates.
pub fn ou_oracle_correlators(cfg: &Config, ts: &[f64]) -> Result<Vec<CorrelatorSet>> {
    let mut tb = Testbed::Ou2d.setup()?;
    tb.potential = Potential::two_timescale(cfg.ou.r);
    let op = tb.discretize()?;
    let t_max = ts.iter().copied().fold(0.0, f64::max);
    let steps = (t_max / cfg.oracle.tau).round() as usize;
    let oracle = ResponseOracle::new(&op, &tb.kappa, cfg.oracle.tau, steps.max(1))?;
    Ok(ts.iter().map(|&t| oracle.correlators(t)).collect::<response_forecast::Result<_>>()?)
}
