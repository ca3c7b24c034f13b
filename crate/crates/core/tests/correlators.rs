use response_forecast::correlators::*;
use response_forecast::dynamics::*;

fn ou_system() -> System {
    System::new(Potential::harmonic_1d(), Perturbation::zero(), CoarseMap::identity(1)).unwrap()
}

fn long_ou(seed: u64) -> SubsystemTrajectory {
    let cfg = SimConfig { dt: 0.005, t_max: 3000.0, burn_in: 10.0, seed, ..Default::default() };
    simulate(&ou_system(), &cfg).unwrap()
}

fn obs(name: &str, f: SubsystemFn) -> Observable {
    Observable::new(name, 1, f).unwrap()
}

fn y() -> Observable {
    obs("y", SubsystemFn::Coordinate(0))
}

#[test]
fn constant_observable() {
    let tr = long_ou(1);
    let e = static_average(&tr, &obs("one", SubsystemFn::Constant(1.0))).unwrap();
    assert_eq!(e.mean, 1.0);
    assert_eq!(e.se, 0.0);
}

#[test]
fn ou_variance_and_autocovariance() {
    let tr = long_ou(2);
    let sq = obs("y2", SubsystemFn::Monomial { coord: 0, power: 2 });
    let e = static_average(&tr, &sq).unwrap();
    assert!((e.mean - 1.0).abs() < 4.0 * e.se, "{e:?}");
    for t in [0.5, 1.0, 2.0] {
        let c = lagged_average(&tr, &y(), &y(), t).unwrap();
        assert!((c.mean - (-t).exp()).abs() < 4.0 * c.se, "lag {t}: {c:?}");
    }
}

#[test]
fn lag_zero_is_static_product() {
    let tr = long_ou(3);
    let sq = obs("y2", SubsystemFn::Monomial { coord: 0, power: 2 });
    let a = lagged_average(&tr, &y(), &y(), 0.0).unwrap();
    let b = static_average(&tr, &sq).unwrap();
    assert!((a.mean - b.mean).abs() < 1e-12 && (a.se - b.se).abs() < 1e-12);
}

#[test]
fn lag_grid_and_data_errors() {
    let cfg = SimConfig { dt: 0.01, t_max: 1.0, burn_in: 1.0, ..Default::default() };
    let tr = simulate(&ou_system(), &cfg).unwrap();
    assert!(matches!(lagged_average(&tr, &y(), &y(), 0.015), Err(response_forecast::Error::LagGrid { .. })));
    let full = lagged_average(&tr, &y(), &y(), 1.0).unwrap();
    assert_eq!(full.n_pairs, 1);
    assert!(!full.reliable);
    assert!(lagged_average(&tr, &y(), &y(), 1.5).is_err());
    let short = SubsystemTrajectory::new(0.1, 1, vec![0.0; 10], 0.0, 0).unwrap();
    assert!(matches!(static_average(&short, &y()), Err(response_forecast::Error::InsufficientData { .. })));
}

#[test]
fn symmetric_double_well_mean_zero() {
    let pot = Potential::gaussian_sum(
        1,
        vec![GaussianTerm { amplitude: 2.0, center: vec![0.0], rates: vec![1.0] }],
        0.5,
    )
    .unwrap();
    let sys = System::new(pot, Perturbation::zero(), CoarseMap::identity(1)).unwrap();
    let cfg = SimConfig { dt: 0.005, t_max: 4000.0, burn_in: 10.0, seed: 4, ..Default::default() };
    let tr = simulate(&sys, &cfg).unwrap();
    let e = static_average(&tr, &y()).unwrap();
    assert!(e.mean.abs() < 4.0 * e.se, "{e:?}");
}

#[test]
fn time_reversal_symmetry() {
    let tr = long_ou(5);
    let a = obs("cos", SubsystemFn::Cosine { coord: 0, amplitude: -1.0, shift: std::f64::consts::FRAC_PI_4 });
    let ab = lagged_average(&tr, &a, &y(), 0.7).unwrap();
    let ba = lagged_average(&tr, &y(), &a, 0.7).unwrap();
    assert!((ab.mean - ba.mean).abs() < 4.0 * (ab.se.powi(2) + ba.se.powi(2)).sqrt());
}

fn short_ensemble(n: usize, seed: u64) -> Vec<SubsystemTrajectory> {
    let cfg = SimConfig { dt: 0.01, t_max: 4.0, burn_in: 8.0, seed, n_traj: n, ..Default::default() };
    simulate_ensemble(&ou_system(), &cfg).unwrap()
}

#[test]
fn bundle_ou_entries() {
    let trajs = short_ensemble(400, 6);
    let c = correlator_bundle(&trajs, &y(), &y(), 1.0).unwrap();
    assert_eq!(c.n_traj, 400);
    assert!((c.lag_v_k_t.mean - (-1f64).exp()).abs() < 4.0 * c.lag_v_k_t.se);
    assert!(c.variance_consistent());
    let one = obs("one", SubsystemFn::Constant(1.0));
    let c1 = correlator_bundle(&trajs, &one, &y(), 1.0).unwrap();
    assert_eq!(c1.mean_k.mean, 1.0);
    assert!((c1.lag_v_k_t.mean - c1.mean_v.mean).abs() < 4.0 * c1.mean_v.se.max(c1.lag_v_k_t.se));
    let zero = obs("zero", SubsystemFn::Zero);
    let c0 = correlator_bundle(&trajs, &y(), &zero, 1.0).unwrap();
    for (i, e) in c0.entries().iter().enumerate() {
        if i > 0 {
            assert_eq!(e.mean, 0.0);
        }
    }
}

#[test]
fn bundle_lag_zero_degenerates() {
    let trajs = short_ensemble(20, 7);
    let c = correlator_bundle(&trajs, &y(), &y(), 0.0).unwrap();
    assert_eq!(c.lag_v_k_t.mean, c.mean_vk.mean);
    assert_eq!(c.lag_v_v_half_t.mean, c.mean_v2.mean);
}

#[test]
fn bundle_rejects_odd_lag_and_mixed_dt() {
    let trajs = short_ensemble(4, 8);
    assert!(correlator_bundle(&trajs, &y(), &y(), 0.01).is_err());
    let mut mixed = trajs.clone();
    let cfg = SimConfig { dt: 0.02, t_max: 4.0, burn_in: 1.0, ..Default::default() };
    mixed.push(simulate(&ou_system(), &cfg).unwrap());
    assert!(matches!(correlator_bundle(&mixed, &y(), &y(), 1.0), Err(response_forecast::Error::Config(_))));
}

#[test]
fn accumulator_split_merge_is_deterministic() {
    let trajs = short_ensemble(30, 9);
    let lengths: Vec<usize> = trajs.iter().map(|t| t.len()).collect();
    let mut whole = CorrelatorAccumulator::new(y(), y(), 0.01, &[0.0, 1.0, 2.0], &lengths).unwrap();
    for t in &trajs {
        whole.push(t).unwrap();
    }
    // per-trajectory accumulators folded in order reproduce the serial result bit for bit
    let mut folded = whole.fork();
    for t in &trajs {
        let mut one = whole.fork();
        one.push(t).unwrap();
        folded.merge(&one);
    }
    assert_eq!(folded.finish().unwrap(), whole.finish().unwrap());
    // any other grouping agrees to rounding
    let mut a = whole.fork();
    let mut b = whole.fork();
    for t in &trajs[..13] {
        a.push(t).unwrap();
    }
    for t in &trajs[13..] {
        b.push(t).unwrap();
    }
    a.merge(&b);
    for (x, y) in a.finish().unwrap().iter().zip(whole.finish().unwrap()) {
        for (p, q) in x.entries().iter().zip(y.entries()) {
            assert!((p.mean - q.mean).abs() < 1e-12 && (p.se - q.se).abs() < 1e-12);
        }
    }
}

#[test]
fn se_shrinks_like_inverse_sqrt() {
    let all = short_ensemble(1024, 10);
    let ns = [16usize, 64, 256, 1024];
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .map(|&n| {
            let c = correlator_bundle(&all[..n], &y(), &y(), 1.0).unwrap();
            ((n as f64).ln(), c.lag_v_k_t.se.ln())
        })
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 4.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 4.0;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((-0.65..=-0.35).contains(&slope), "slope {slope}");
}

#[test]
fn csv_round_trip() {
    let trajs = short_ensemble(8, 11);
    let c = correlator_bundle(&trajs, &y(), &y(), 2.0).unwrap();
    let mut buf = Vec::new();
    c.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("name,value,se\nmean_k,"));
    assert!(text.contains("\nn_samples,"));
    let back = CorrelatorSet::read_csv(&buf[..]).unwrap();
    for (a, b) in back.entries().iter().zip(c.entries()) {
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.se, b.se);
    }
    assert_eq!((back.t, back.n_traj, back.n_samples), (2.0, 8, c.n_samples));
}
