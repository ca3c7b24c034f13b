use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_response-forecast"))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("rf-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).env_remove("RESPONSE_FORECAST_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A fast configuration: coarse step, short paths, a handful of replicates.
const SMALL: &str = r#"
t_grid = [0.0, 0.5, 1.0]
[sim]
dt = 0.01
burn_in = 2.0
n_traj = 6
trajectory_length = 4.0
"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn value_after(text: &str, key: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no {key} in {text}"));
    line[key.len()..].trim().parse().unwrap()
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let d = scratch("cfg");
    let bad = write(&d, "unknown.toml", "[sim]\nsteps = 3\n");
    let o = run(&["--config", &bad, "simulate"], &d);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("steps"), "{}", stderr(&o));

    let bad = write(&d, "dt.toml", "[sim]\ndt = -0.1\n");
    let o = run(&["--config", &bad, "simulate"], &d);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sim.dt"), "{}", stderr(&o));

    let o = run(&["--n-traj", "0", "simulate"], &d);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sim.n_traj"));

    let o = run(&["--config", "/nonexistent/cfg.toml", "simulate"], &d);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_thread_count_exits_2() {
    let d = scratch("threads");
    let o = bin().args(["spectral", "x"]).current_dir(&d).env("RESPONSE_FORECAST_THREADS", "many").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("RESPONSE_FORECAST_THREADS"));
}

#[test]
fn missing_input_directory_is_a_plain_error() {
    let d = scratch("missing");
    let o = run(&["respond", "--input", "does-not-exist"], &d);
    assert_eq!(o.status.code(), Some(1));
}

const EXAMPLE: &str = include_str!("../data/example1.chain");

#[test]
fn spectral_on_the_example_chain() {
    let d = scratch("spectral");
    let f = write(&d, "ex.chain", EXAMPLE);
    let o = run(&["--out", "res", "spectral", &f], &d);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!((value_after(&s, "lambda* =") - 0.2).abs() < 1e-12);
    let lp = value_after(&s, "lambda_pi =");
    assert!((lp - (18.0 - 2f64.sqrt()) / 10.0).abs() < 1e-12, "{lp}");
    let csv = std::fs::read_to_string(d.join("res/spectral.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn identity_partition_sees_every_mode() {
    let d = scratch("identity");
    let f = write(&d, "id.chain", &EXAMPLE.replace("0 1 1 0", "0 1 2 3"));
    let o = run(&["spectral", &f], &d);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert_eq!(value_after(&s, "lambda_pi ="), value_after(&s, "lambda* ="));
}

#[test]
fn perturbed_rates_move_lambda_pi_slightly() {
    let d = scratch("perturbed");
    // raising the fast 0<->1 rate by 1e-3 keeps the slow mode invisible
    let fast = EXAMPLE.replace("-0.9  0.8", "-0.901  0.801").replace(" 0.8 -0.9", " 0.801 -0.901");
    let o = run(&["spectral", &write(&d, "fast.chain", &fast)], &d);
    assert!(o.status.success(), "{}", stderr(&o));
    let shift = (value_after(&stdout(&o), "lambda_pi =") - (18.0 - 2f64.sqrt()) / 10.0).abs();
    assert!(shift > 1e-4 && shift < 1e-2, "{shift}");

    // an asymmetric change to one slow rate couples the slow mode, however
    // weakly, and the subsystem gap drops to the global gap
    let slow = EXAMPLE
        .replace(" 0.8 -0.9  0.1  0.0", " 0.8 -0.901  0.101  0.0")
        .replace(" 0.0  0.1 -1.0  0.9", " 0.0  0.101 -1.001  0.9");
    let o = run(&["spectral", &write(&d, "slow.chain", &slow)], &d);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert_eq!(value_after(&s, "lambda_pi ="), value_after(&s, "lambda* ="));
    assert!((value_after(&s, "lambda* =") - 0.2).abs() < 2e-3);
}

#[test]
fn malformed_chain_is_rejected() {
    let d = scratch("malformed");
    let f = write(&d, "bad.chain", &EXAMPLE.replace("1/4 1/4 1/4 1/4", "1/2 1/4 1/4 1/4"));
    let o = run(&["spectral", &f], &d);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn simulate_correlate_respond_round_trip() {
    let d = scratch("pipeline");
    let cfg = write(&d, "small.toml", SMALL);
    let o = run(&["--config", &cfg, "--out", "traj", "simulate", "--t-max", "4"], &d);
    assert!(o.status.success(), "{}", stderr(&o));
    let trajs: Vec<_> = std::fs::read_dir(d.join("traj")).unwrap().collect();
    assert_eq!(trajs.len(), 6);
    let first = std::fs::read_to_string(d.join("traj/traj_00000.csv")).unwrap();
    assert!(first.starts_with("t,y1\n"));
    assert_eq!(first.lines().count(), 402);

    let o = run(&["--config", &cfg, "--out", "corr", "correlate", "--input", "traj"], &d);
    assert!(o.status.success(), "{}", stderr(&o));
    for i in 0..3 {
        assert!(d.join(format!("corr/correlators_{i:03}.csv")).exists());
    }

    let o = run(&["--config", &cfg, "--out", "resp", "respond", "--input", "corr", "--ou-bound"], &d);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.join("resp/response.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(stdout(&o).contains("T = 0.5"));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let d = scratch("seeds");
    let cfg = write(&d, "small.toml", SMALL);
    let go = |out: &str, seed: &str| {
        let o = run(&["--config", &cfg, "--seed", seed, "--out", out, "simulate", "--t-max", "1"], &d);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(d.join(out).join("traj_00003.csv")).unwrap()
    };
    let a = go("a", "11");
    let b = go("b", "11");
    let c = go("c", "12");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn same_seed_same_output_across_thread_counts() {
    let d = scratch("threads-det");
    let cfg = write(&d, "small.toml", SMALL);
    let go = |out: &str, threads: &str| {
        let o = bin()
            .args(["--config", &cfg, "--out", out, "--epsilon", "0.2", "experiment", "ou"])
            .current_dir(&d)
            .env("RESPONSE_FORECAST_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(d.join(out).join("ou_response.csv")).unwrap()
    };
    assert_eq!(go("one", "1"), go("three", "3"));
}

#[test]
fn zero_forcing_ou_experiment_is_flat() {
    let d = scratch("flat");
    let cfg = write(&d, "small.toml", SMALL);
    let o = run(&["--config", &cfg, "--epsilon", "0", "experiment", "ou"], &d);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.join("out/ou_response.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (inc, pred, order0) = (col("increment"), col("prediction"), col("order0"));
    for line in csv.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap_or(f64::NAN)).collect();
        assert_eq!(f[inc], 0.0);
        assert_eq!(f[pred], f[order0]);
    }
    let svg = std::fs::read_to_string(d.join("out/ou_response.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);
    assert!(svg.contains("class=\"x-label\"") && svg.contains("class=\"y-label\""));
}

#[test]
fn chain_example_experiment_writes_its_artifacts() {
    let d = scratch("chain");
    let o = run(&["experiment", "chain-example"], &d);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("decay inequality holds at all times: true"));
    for f in ["chain_spectrum.csv", "chain_decay.csv", "chain_decay.svg"] {
        assert!(d.join("out").join(f).exists(), "{f}");
    }
    let svg = std::fs::read_to_string(d.join("out/chain_decay.svg")).unwrap();
    assert!(svg.starts_with("<?xml") || svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn multiwell_without_oracle() {
    let d = scratch("multiwell");
    let cfg = write(&d, "small.toml", SMALL);
    let o = run(&["--config", &cfg, "experiment", "multiwell", "--no-oracle"], &d);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["multiwell_response.csv", "multiwell_correlators.csv", "multiwell_response.svg", "multiwell_potential.svg"] {
        assert!(d.join("out").join(f).exists(), "{f}");
    }
    assert!(!d.join("out/multiwell_oracle.csv").exists());
}

#[test]
fn oracle_verify_on_the_1d_testbed() {
    let d = scratch("verify");
    let o = run(&["oracle-verify", "ou1d"], &d);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(!stdout(&o).contains("FAIL"));
    let csv = std::fs::read_to_string(d.join("out/oracle_ou1d.csv")).unwrap();
    assert!(csv.starts_with("T,d1_fd,d1_lemma,d2_fd,d2_exact,d2_approx,fV,fk,bound"));

    let o = run(&["--out", "zero", "oracle-verify", "ou1d", "--zero-perturbation"], &d);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.join("zero/oracle_ou1d.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        // every response column vanishes; the bound does too since V = 0
        assert!(f[1..].iter().all(|x| *x == 0.0), "{line}");
    }
}
