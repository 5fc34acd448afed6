#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use rspnet::harness::oracle::{
    brute_force_law, event_probability, path_probabilities, simulated_path_counts,
};
use rspnet::harness::scenario::{example1_matrix, random_periodic_matrix};
use rspnet::schedule::Flags;
use rspnet::{Error, InteractionMatrix, Mode, ReinforcementSchedule, Summability};

fn forcing() -> InteractionMatrix {
    InteractionMatrix::from_transpose_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]], Mode::Generalized)
        .unwrap()
}

fn schedules() -> Vec<ReinforcementSchedule> {
    vec![
        ReinforcementSchedule::power(1.0, 0.75).unwrap(),
        ReinforcementSchedule::power(0.5, 2.0).unwrap(),
        ReinforcementSchedule::urn(2.0, 1.0).unwrap(),
        ReinforcementSchedule::constant(0.3).unwrap(),
        ReinforcementSchedule::spike(2, 1.0, 3.7).unwrap(),
    ]
}

#[test]
fn example1_martingale_up_to_horizon_six() {
    let m = example1_matrix();
    for s in schedules() {
        let law = brute_force_law(&m, &s, &[0.2, 0.5, 0.8], 6).unwrap();
        assert!(law.martingale_error().unwrap() <= 1e-12);
        for level in &law.levels {
            assert!((level.total_probability - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn mean_follows_linear_recursion() {
    // E[Z_{n+1}] = (1 - r_n) E[Z_n] + r_n W^T E[Z_n] by linearity
    let m = example1_matrix();
    for s in schedules() {
        let law = brute_force_law(&m, &s, &[0.3, 0.9, 0.1], 6).unwrap();
        for w in law.levels.windows(2) {
            let r = s.r(w[0].n);
            let wz = m.apply(&w[0].mean_z);
            for l in 0..3 {
                let expected = (1.0 - r) * w[0].mean_z[l] + r * wz[l];
                assert!((w[1].mean_z[l] - expected).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn scaled_leading_coefficient_is_martingale_under_forcing() {
    let m = forcing();
    for s in [
        ReinforcementSchedule::power(1.0, 0.6).unwrap(),
        ReinforcementSchedule::constant(0.4).unwrap(),
    ] {
        for h in 1..=5 {
            let law = brute_force_law(&m, &s, &[0.7, 0.4], h).unwrap();
            assert!(law.scaled_martingale_error().unwrap() <= 1e-12, "H = {h}");
        }
    }
}

#[test]
fn path_probabilities_sum_to_one() {
    let m = example1_matrix();
    let s = ReinforcementSchedule::urn(2.0, 1.0).unwrap();
    let p = path_probabilities(&m, &s, &[0.2, 0.5, 0.8], 5).unwrap();
    assert_eq!(p.len(), 1 << 15);
    let total: f64 = p.iter().sum();
    assert!((total - 1.0).abs() <= 1e-12);
    assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
}

#[test]
fn size_limit() {
    let m = example1_matrix();
    let s = ReinforcementSchedule::constant(0.5).unwrap();
    assert!(matches!(
        brute_force_law(&m, &s, &[0.5; 3], 9),
        Err(Error::TooLarge { actual: 27, limit: 24 })
    ));
}

#[test]
fn barrier_start_has_a_single_path() {
    let m = example1_matrix();
    let s = ReinforcementSchedule::constant(0.5).unwrap();
    let law = brute_force_law(&m, &s, &[0.0; 3], 4).unwrap();
    let paths = law.paths.unwrap();
    assert_eq!(paths.len(), 1);
    assert_eq!(paths[0].code, 0);
    assert_eq!(paths[0].probability, 1.0);
}

fn alternating(path: &[Vec<u8>]) -> bool {
    path.iter().enumerate().all(|(k, x)| {
        let n = k + 1;
        if n % 2 == 0 {
            x[..] == [0, 1, 1]
        } else {
            x[..] == [1, 0, 0]
        }
    })
}

#[test]
fn alternating_event_lower_bound() {
    let m = example1_matrix();
    let values: Vec<f64> = (0..8).map(|n| 1.0 - 0.05 / (n + 1) as f64).collect();
    let s = ReinforcementSchedule::custom(
        values,
        Flags::new(Summability::Infinite, Summability::Finite),
    )
    .unwrap();
    for z0 in [[0.05, 0.95, 0.95], [0.2, 0.5, 0.8], [0.5, 0.5, 0.5]] {
        let first = event_probability(&m, &s, &z0, 1, alternating).unwrap();
        assert!(first > 0.0);
        for n1 in 1..=3 {
            let p = event_probability(&m, &s, &z0, n1, alternating).unwrap();
            // X_{n-1} enters Z_{n-1} with weight r_{n-2}, so each further
            // step costs at least r_{n-2}^3
            let bound = first * (2..=n1).map(|n| s.r(n - 2).powi(3)).product::<f64>();
            assert!(p >= bound, "z0 {z0:?}, n1 {n1}: {p} < {bound}");
        }
    }
}

#[test]
fn simulated_frequencies_match_exact_law() {
    let m = InteractionMatrix::mean_field(2).unwrap();
    let s = ReinforcementSchedule::urn(2.0, 1.0).unwrap();
    let z0 = [0.3, 0.6];
    let reps = 20_000;
    let exact = path_probabilities(&m, &s, &z0, 2).unwrap();
    let counts = simulated_path_counts(&m, &s, &z0, 2, 17, reps).unwrap();
    assert_eq!(counts.iter().sum::<u64>(), reps as u64);
    for (p, c) in exact.iter().zip(&counts) {
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        let freq = *c as f64 / reps as f64;
        assert!((freq - p).abs() <= 5.0 * se.max(1e-12), "{freq} vs {p}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn martingale_on_random_instances(
        n in 2usize..=4,
        k in 1usize..=2,
        seed in any::<u64>(),
        z0 in prop::collection::vec(0.0f64..=1.0, 4),
        gamma in 0.3f64..2.5,
    ) {
        let k = k.min(n);
        let m = random_periodic_matrix(n, k, 0.7, seed).unwrap();
        let s = ReinforcementSchedule::power(1.0, gamma).unwrap();
        let h = 12 / n;
        let law = brute_force_law(&m, &s, &z0[..n], h).unwrap();
        prop_assert!(law.martingale_error().unwrap() <= 1e-12);
    }
}
