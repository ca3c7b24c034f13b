use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use response_forecast::chain::*;

fn indicator_difference() -> Vec<f64> {
    vec![1.0, -1.0, -1.0, 1.0]
}

#[test]
fn example_one_spectrum() {
    let (g, _) = GeneratorMatrix::example_one();
    let r = spectrum(&g).unwrap();
    let s2 = 2f64.sqrt();
    let want = [0.0, 0.2, (18.0 - s2) / 10.0, (18.0 + s2) / 10.0];
    for (a, b) in r.eigenvalues.iter().zip(want) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
    assert_eq!(r.gap, GapValue::Finite(r.eigenvalues[1]));
    // the slow mode separates {1,2} from {3,4}, invisible to the labelling
    let v2 = &r.eigenvectors[1];
    assert!((v2[0] - v2[1]).abs() < 1e-12 && (v2[2] - v2[3]).abs() < 1e-12);
}

#[test]
fn example_one_subsystem_gap() {
    let (g, p) = GeneratorMatrix::example_one();
    let r = subsystem_spectral_gap(&g, &p, COUPLING_TOL).unwrap();
    let lp = r.lambda_pi().unwrap().value();
    assert!((lp - (18.0 - 2f64.sqrt()) / 10.0).abs() < 1e-12);
    assert!((lp - 1.65858).abs() < 1e-5);
    let sub = r.subsystem.as_ref().unwrap();
    assert!(sub.coupling_of(1).unwrap().coupling < 1e-12);
    let mut csv = Vec::new();
    sub.write_csv(&r.eigenvalues, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("lambda,coupling_norm,in_subsystem\n"));
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().nth(2).unwrap().ends_with("false"));
}

#[test]
fn null_generator_and_two_state() {
    let g = GeneratorMatrix::new(DMatrix::zeros(2, 2), vec![0.5, 0.5]).unwrap();
    let r = spectrum(&g).unwrap();
    assert_eq!(r.eigenvalues, vec![0.0, 0.0]);
    assert_eq!(r.gap, GapValue::Infinite);
    for q in [0.3, 1.0, 7.5] {
        let g = GeneratorMatrix::new(DMatrix::from_row_slice(2, 2, &[-q, q, q, -q]), vec![0.5, 0.5]).unwrap();
        let r = spectrum(&g).unwrap();
        assert!(r.eigenvalues[0].abs() < 1e-14);
        assert!((r.eigenvalues[1] - 2.0 * q).abs() < 1e-12);
    }
}

#[test]
fn non_reversible_chain_rejected() {
    // a 3-cycle with uniform mu has no detailed balance
    let q = DMatrix::from_row_slice(3, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0, 1.0, 0.0, -1.0]);
    let g = GeneratorMatrix::new(q, vec![1.0 / 3.0; 3]).unwrap();
    assert!(matches!(spectrum(&g), Err(response_forecast::Error::Reversibility { .. })));
}

#[test]
fn identity_and_single_partitions() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let g = GeneratorMatrix::random_reversible(7, 0.5, &mut rng);
        let r = subsystem_spectral_gap(&g, &StatePartition::identity(7), COUPLING_TOL).unwrap();
        assert_eq!(r.lambda_pi().unwrap(), r.gap);
        let r = subsystem_spectral_gap(&g, &StatePartition::single(7), COUPLING_TOL).unwrap();
        assert_eq!(r.lambda_pi().unwrap(), GapValue::Infinite);
    }
}

#[test]
fn semigroup_matches_matrix_exponential() {
    let (g, _) = GeneratorMatrix::example_one();
    let f = indicator_difference();
    let p = semigroup_apply(&g, 1.0, &f).unwrap();
    let dense = g.q().exp() * DMatrix::from_column_slice(4, 1, &f);
    for i in 0..4 {
        assert!((p[i] - dense[i]).abs() < 1e-10);
    }
    assert_eq!(semigroup_apply(&g, 0.0, &f).unwrap().iter().zip(&f).filter(|(a, b)| (*a - *b).abs() > 1e-14).count(), 0);
    let c = semigroup_apply(&g, 3.0, &[2.0; 4]).unwrap();
    assert!(c.iter().all(|v| (v - 2.0).abs() < 1e-13));
    assert!(semigroup_apply(&g, -0.1, &f).is_err());
}

#[test]
fn example_one_decay() {
    let (g, p) = GeneratorMatrix::example_one();
    let rep = verify_decay(&g, &p, &indicator_difference(), &[0.0, 0.5, 1.0, 2.0, 5.0]).unwrap();
    assert!(rep.all_hold());
    assert_eq!(rep.rows[0].lhs, rep.rows[0].rhs);
    for r in &rep.rows[1..] {
        assert!(r.exponent >= rep.lambda_pi.value() - 1e-9);
    }
    // preconditions
    assert!(verify_decay(&g, &p, &[1.0, 0.0, 0.0, -1.0], &[1.0]).is_err());
    assert!(verify_decay(&g, &p, &[1.0, 1.0, 1.0, 1.0], &[1.0]).is_err());
}

fn random_measurable(part: &StatePartition, mu: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    let vals: Vec<f64> = (0..part.n_classes()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let mut f: Vec<f64> = part.classes().iter().map(|&c| vals[c]).collect();
    let mean: f64 = f.iter().zip(mu).map(|(a, m)| a * m).sum();
    f.iter_mut().for_each(|v| *v -= mean);
    f
}

#[test]
fn decay_fuzz_six_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = GeneratorMatrix::random_reversible(6, 0.5, &mut rng);
    let labels: Vec<i64> = (0..6).map(|_| rng.random_range(0..3)).collect();
    let part = StatePartition::from_labels(&labels).unwrap();
    let report = subsystem_spectral_gap(&g, &part, COUPLING_TOL).unwrap();
    let times = [0.0, 0.1, 0.5, 1.0, 3.0, 10.0];
    for _ in 0..100 {
        let f = random_measurable(&part, g.mu(), &mut rng);
        assert!(verify_decay_with(&report, &part, &f, &times).unwrap().all_hold());
    }
}

#[test]
fn corollary_both_directions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut strict = 0;
    for trial in 0..200 {
        let n = 3 + trial % 6;
        let g = if trial % 4 == 0 {
            // symmetric lattices with symmetric partitions create decoupled slow modes
            let (g, _) = GeneratorMatrix::example_one();
            g
        } else {
            GeneratorMatrix::random_reversible(n, 0.4, &mut rng)
        };
        let n = g.n();
        let labels: Vec<i64> = if trial % 4 == 0 {
            vec![0, 1, 1, 0]
        } else {
            (0..n).map(|_| rng.random_range(0..2)).collect()
        };
        let part = StatePartition::from_labels(&labels).unwrap();
        let r = subsystem_spectral_gap(&g, &part, COUPLING_TOL).unwrap();
        let lp = r.lambda_pi().unwrap().value();
        let ls = r.gap.value();
        assert!(lp >= ls - 1e-12);
        let first = &r.subsystem.as_ref().unwrap().groups.iter().find(|g| !g.is_zero).unwrap();
        let decoupled = !first.coupled;
        assert_eq!(lp > ls, decoupled, "strictness iff the slowest eigenspace is orthogonal");
        strict += decoupled as usize;
    }
    assert!(strict > 0);
}

#[test]
fn eigen_reconstruction_and_orthonormality() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in [2, 4, 9, 20] {
        let g = GeneratorMatrix::random_reversible(n, 0.3, &mut rng);
        let r = spectrum(&g).unwrap();
        let err = (r.reconstruct() + g.q()).norm();
        assert!(err < 1e-10, "reconstruction error {err}");
        for a in 0..n {
            for b in 0..n {
                let ip = r.inner(&r.eigenvectors[a], &r.eigenvectors[b]);
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-10);
            }
        }
        let c = &r.eigenvectors[0];
        assert!(c.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }
}

#[test]
fn invariant_under_relabel_and_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..30 {
        let n = 6;
        let g = GeneratorMatrix::random_reversible(n, 0.5, &mut rng);
        let labels: Vec<i64> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let part = StatePartition::from_labels(&labels).unwrap();
        let base = subsystem_spectral_gap(&g, &part, COUPLING_TOL).unwrap().lambda_pi().unwrap().value();

        let relabeled: Vec<i64> = labels.iter().map(|l| 100 - 7 * l).collect();
        let p2 = StatePartition::from_labels(&relabeled).unwrap();
        let v2 = subsystem_spectral_gap(&g, &p2, COUPLING_TOL).unwrap().lambda_pi().unwrap().value();
        assert!(base == v2 || (base - v2).abs() < 1e-10 * base.max(1.0));

        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let gp = g.permuted(&perm).unwrap();
        let lp: Vec<i64> = perm.iter().map(|&k| labels[k]).collect();
        let pp = StatePartition::from_labels(&lp).unwrap();
        let v3 = subsystem_spectral_gap(&gp, &pp, COUPLING_TOL).unwrap().lambda_pi().unwrap().value();
        assert!(base == v3 || (base - v3).abs() < 1e-10 * base.max(1.0));
    }
}
