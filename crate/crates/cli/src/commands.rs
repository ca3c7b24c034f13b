use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use response_forecast::chain::{GeneratorMatrix, COUPLING_TOL};
use response_forecast::correlators::{CorrelatorAccumulator, CorrelatorSet};
use response_forecast::dynamics::{simulate_ensemble, SubsystemTrajectory};
use response_forecast::response::{ou_bound, predict, write_response_csv};

use crate::config::{Config, ConfigError, ExperimentKind};
use crate::experiment::{self, chain_report, setup_for, write_spectral_csv};
use crate::verify::{verify, TestbedArg};

#[derive(Debug, Parser)]
#[command(name = "response-forecast", version, about = "Second-order response prediction from equilibrium data")]
pub struct Cli {
    /// TOML configuration; defaults reproduce the reference experiments.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub n_traj: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SystemArg {
    Ou,
    Multiwell,
}

impl SystemArg {
    fn kind(self) -> ExperimentKind {
        match self {
            Self::Ou => ExperimentKind::Ou,
            Self::Multiwell => ExperimentKind::Multiwell,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an ensemble and write one `traj_NNNNN.csv` per path.
    Simulate {
        #[arg(long, value_enum, default_value = "ou")]
        system: SystemArg,
        /// Path length; defaults to the largest horizon of the T grid.
        #[arg(long)]
        t_max: Option<f64>,
    },
    /// Correlators at every T-grid horizon from `traj_*.csv` files.
    Correlate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "ou")]
        system: SystemArg,
    },
    /// Response predictions from `correlators_*.csv` files.
    Respond {
        #[arg(long)]
        input: PathBuf,
        /// Attach the closed-form OU remainder bound.
        #[arg(long)]
        ou_bound: bool,
    },
    /// Spectrum and subsystem gap of a chain file.
    Spectral {
        file: PathBuf,
        #[arg(long, default_value_t = COUPLING_TOL)]
        tol: f64,
    },
    /// Cross-check the grid oracle's identities on a testbed.
    OracleVerify {
        #[arg(value_enum)]
        testbed: TestbedArg,
        /// Number of grid doublings.
        #[arg(long, default_value_t = 0)]
        refine: u32,
        /// Replace the perturbation by zero.
        #[arg(long)]
        zero_perturbation: bool,
    },
    /// Run a full experiment.
    Experiment {
        #[arg(value_enum)]
        kind: ExperimentKind,
        /// Multiwell only: skip the grid oracle.
        #[arg(long)]
        no_oracle: bool,
    },
}

/// How a command failed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Numeric(anyhow::Error),
    Other(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numeric(_) => 3,
            Self::Other(_) => 1,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Self::Config(e) | Self::Numeric(e) | Self::Other(e) => e,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        use response_forecast::Error as E;
        if e.downcast_ref::<ConfigError>().is_some() {
            return Self::Config(e);
        }
        match e.downcast_ref::<E>() {
            Some(
                E::Divergence { .. } | E::NumericDomain { .. } | E::Numerical(_) | E::StepSize { .. },
            ) => Self::Numeric(e),
            Some(E::Io(_)) | None => Self::Other(e),
            Some(_) => Self::Config(e),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn with_overrides(cli: &Cli) -> Result<Config, ConfigError> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.sim.seed = s;
    }
    if let Some(n) = cli.n_traj {
        cfg.sim.n_traj = n;
    }
    if let Some(e) = cli.epsilon {
        cfg.epsilon = e;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sorted_files(dir: &Path, prefix: &str) -> anyhow::Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with(prefix) && n.ends_with(".csv"))
        })
        .collect();
    v.sort();
    if v.is_empty() {
        return Err(ConfigError(format!("no {prefix}*.csv files in {}", dir.display())).into());
    }
    Ok(v)
}

fn create(path: PathBuf) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

pub fn run(cli: &Cli) -> Outcome {
    let cfg = with_overrides(cli)?;
    let out = cfg.output_dir.clone();
    match &cli.command {
        Command::Simulate { system, t_max } => {
            let setup = setup_for(&cfg, system.kind())?;
            let t_max = t_max.unwrap_or_else(|| cfg.t_grid(system.kind()).into_iter().fold(0.0, f64::max));
            let eps = cli.epsilon.unwrap_or(0.0);
            let trajs = simulate_ensemble(&setup.system, &cfg.sim_config(eps, t_max)).map_err(anyhow::Error::from)?;
            for (i, t) in trajs.iter().enumerate() {
                let mut w = create(out.join(format!("traj_{i:05}.csv")))?;
                t.write_csv(&mut w).map_err(anyhow::Error::from)?;
                w.flush().map_err(anyhow::Error::from)?;
            }
            println!("wrote {} trajectories to {}", trajs.len(), out.display());
        }
        Command::Correlate { input, system } => {
            let setup = setup_for(&cfg, system.kind())?;
            let files = sorted_files(input, "traj_")?;
            let trajs = files
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
                    SubsystemTrajectory::read_csv(BufReader::new(f), 0.0, i as u64)
                        .with_context(|| format!("reading {}", p.display()))
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let dt = trajs[0].dt();
            let lengths: Vec<usize> = trajs.iter().map(|t| t.len()).collect();
            let shortest = lengths.iter().copied().min().unwrap_or(0);
            let ts: Vec<f64> = cfg
                .t_grid(system.kind())
                .into_iter()
                .filter(|t| ((t / dt).round() as usize) < shortest)
                .collect();
            let mut acc = CorrelatorAccumulator::new(setup.kappa.clone(), setup.v.clone(), dt, &ts, &lengths)
                .map_err(anyhow::Error::from)?;
            for t in &trajs {
                acc.push(t).map_err(anyhow::Error::from)?;
            }
            let sets = acc.finish().map_err(anyhow::Error::from)?;
            for (i, c) in sets.iter().enumerate() {
                let mut w = create(out.join(format!("correlators_{i:03}.csv")))?;
                c.write_csv(&mut w).map_err(anyhow::Error::from)?;
                w.flush().map_err(anyhow::Error::from)?;
            }
            println!("{} trajectories, {} horizons -> {}", trajs.len(), sets.len(), out.display());
        }
        Command::Respond { input, ou_bound: with_bound } => {
            let mut sets = sorted_files(input, "correlators_")?
                .iter()
                .map(|p| {
                    let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
                    CorrelatorSet::read_csv(BufReader::new(f)).with_context(|| format!("reading {}", p.display()))
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            sets.sort_by(|a, b| a.t.total_cmp(&b.t));
            let rows = sets
                .iter()
                .map(|c| {
                    let e = predict(c, cfg.epsilon);
                    if *with_bound {
                        Ok(e.with_bound(ou_bound(cfg.ou.r, c.t)?))
                    } else {
                        Ok(e)
                    }
                })
                .collect::<response_forecast::Result<Vec<_>>>()
                .map_err(anyhow::Error::from)?;
            let mut w = create(out.join("response.csv"))?;
            write_response_csv(&rows, &mut w).map_err(anyhow::Error::from)?;
            w.flush().map_err(anyhow::Error::from)?;
            for r in &rows {
                println!("T = {:<6} prediction {:+.6} (first order {:+.6})", r.t, r.prediction, r.first_order_prediction());
            }
        }
        Command::Spectral { file, tol } => {
            let text = std::fs::read_to_string(file)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", file.display())))?;
            let (gen, part) = GeneratorMatrix::parse(&text).map_err(anyhow::Error::from)?;
            let report = chain_report(&gen, &part, *tol)?;
            print_spectral(&report);
            write_spectral_csv(&report, &out, "spectral.csv")?;
        }
        Command::OracleVerify { testbed, refine, zero_perturbation } => {
            let report = verify(*testbed, *refine, *zero_perturbation)?;
            let name = format!("oracle_{}.csv", report.testbed);
            let mut w = create(out.join(&name))?;
            response_forecast::oracle::write_oracle_csv(&report.rows, &mut w).map_err(anyhow::Error::from)?;
            w.flush().map_err(anyhow::Error::from)?;
            println!("{}: {} grid points, lambda_pi = {:.6}", report.testbed, report.grid_points, report.lambda_pi);
            for c in &report.checks {
                println!(
                    "  {:<32} {:.3e}  (tol {:.0e})  {}",
                    c.name,
                    c.value,
                    c.tol,
                    if c.pass() { "ok" } else { "FAIL" }
                );
            }
            if !report.all_pass() {
                return Err(Failure::Numeric(anyhow!("oracle identities failed on {}", report.testbed)));
            }
        }
        Command::Experiment { kind, no_oracle } => match kind {
            ExperimentKind::Ou => {
                let r = experiment::run_ou(&cfg, Some(&out))?;
                println!("lambda = {:.6}, ou_constant = {:.6}", r.lambda, r.constant);
                println!(
                    "time-averaged |direct - prediction|: first order {:.3e}, second order {:.3e}",
                    r.deviation_first, r.deviation_second
                );
            }
            ExperimentKind::Multiwell => {
                let r = experiment::run_multiwell(&cfg, Some(&out), !no_oracle)?;
                if let Some(o) = &r.oracle {
                    println!(
                        "lambda* = {:.6}, lambda_pi(x) = {:.6}, lambda_pi(y) = {:.6}",
                        o.lambda_star, o.lambda_pi_x, o.lambda_pi_y
                    );
                }
                println!(
                    "time-averaged |direct - prediction|: first order {:.3e}, second order {:.3e}",
                    r.deviation_first, r.deviation_second
                );
            }
            ExperimentKind::ChainExample => {
                let r = experiment::run_chain_example(Some(&out))?;
                print_spectral(&r.spectral);
                println!("decay inequality holds at all times: {}", r.decay.all_hold());
            }
        },
    }
    Ok(())
}

fn print_spectral(report: &response_forecast::chain::SpectralReport) {
    println!("lambda* = {}", report.gap);
    let sub = report.subsystem.as_ref().expect("subsystem computed");
    println!("lambda_pi = {}", sub.lambda_pi);
    println!("{:>14}  {:>14}  in_subsystem", "lambda", "coupling");
    for g in &sub.groups {
        println!("{:>14.10}  {:>14.6e}  {}", g.lambda, g.coupling, g.coupled);
    }
}
