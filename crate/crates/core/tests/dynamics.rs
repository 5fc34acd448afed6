use proptest::prelude::*;
use rspnet::dynamics::{simulate, step, CheckpointPlan, Spacing, SystemState};
use rspnet::harness::scenario::{example1_matrix, random_periodic_matrix};
use rspnet::schedule::clock_times;
use rspnet::{InteractionMatrix, ReinforcementSchedule, SpectralStructure};

fn schedule(kind: u8, gamma: f64) -> ReinforcementSchedule {
    match kind % 4 {
        0 => ReinforcementSchedule::power(1.0, gamma).unwrap(),
        1 => ReinforcementSchedule::spike(3, 1.0, gamma + 1.0).unwrap(),
        2 => ReinforcementSchedule::urn(1.5, 1.0).unwrap(),
        _ => ReinforcementSchedule::constant(gamma / 3.0).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn state_stays_in_unit_cube(
        n in 2usize..=8,
        k in 1usize..=3,
        seed in any::<u64>(),
        kind in any::<u8>(),
        gamma in 0.2f64..2.0,
        z0 in prop::collection::vec(0.0f64..=1.0, 8),
    ) {
        let m = random_periodic_matrix(n, k.min(n), 0.6, seed).unwrap();
        let s = schedule(kind, gamma);
        let mut state = SystemState::new(z0[..n].to_vec(), seed).unwrap();
        for _ in 0..200 {
            let x = step(&mut state, &m, &s).unwrap();
            prop_assert!(x.iter().all(|&b| b <= 1));
            prop_assert!(state.z.iter().all(|z| (0.0..=1.0).contains(z)));
        }
    }

    #[test]
    fn barriers_absorb(
        n in 2usize..=8,
        seed in any::<u64>(),
        kind in any::<u8>(),
        gamma in 0.2f64..2.0,
        one in any::<bool>(),
    ) {
        let m = random_periodic_matrix(n, 1, 0.6, seed).unwrap();
        let s = schedule(kind, gamma);
        let value = if one { 1.0 } else { 0.0 };
        let mut state = SystemState::new(vec![value; n], seed).unwrap();
        for _ in 0..100 {
            let x = step(&mut state, &m, &s).unwrap();
            prop_assert!(x.iter().all(|&b| f64::from(b) == value));
            prop_assert!(state.z.iter().all(|&z| z == value));
        }
    }

    #[test]
    fn clock_times_ignore_the_trajectory(
        seed_a in any::<u64>(),
        seed_b in any::<u64>(),
        kind in any::<u8>(),
        gamma in 0.2f64..2.0,
    ) {
        let m = example1_matrix();
        let s = schedule(kind, gamma);
        let plan = CheckpointPlan { spacing: Spacing::Sparse, ..CheckpointPlan::default() };
        let a = simulate(&[0.1, 0.5, 0.9], &m, &s, 60, seed_a, plan.clone()).unwrap();
        let b = simulate(&[0.7, 0.2, 0.3], &m, &s, 60, seed_b, plan).unwrap();
        prop_assert_eq!(&a.clock_times, &b.clock_times);
        prop_assert_eq!(&a.clock_times, &clock_times(&s, 60));
    }

    #[test]
    fn decomposition_reproduces_state(seed in any::<u64>(), z0 in prop::collection::vec(0.0f64..=1.0, 3)) {
        let m = example1_matrix();
        let s = ReinforcementSchedule::spike(2, 1.0, 2.0).unwrap();
        let t = simulate(&z0, &m, &s, 50, seed, CheckpointPlan::every_step()).unwrap();
        for c in &t.checkpoints {
            let d = c.decomposition.as_ref().unwrap();
            for l in 0..3 {
                prop_assert!((d.z1[l] + d.z2[l] + d.z3[l] - c.z[l]).abs() <= f64::EPSILON);
            }
        }
    }
}

#[test]
fn spike_clock_times() {
    let s = ReinforcementSchedule::spike(4, 1.0, 3.7).unwrap();
    let c = clock_times(&s, 60);
    // r_1 = 1 is clamped just below 1, so n = 1 also counts
    assert_eq!(c.tau[0], 1);
    assert_eq!(c.sigma[0], 2);
    for (i, (&t, &sg)) in c.tau.iter().zip(&c.sigma).enumerate().skip(1) {
        assert_eq!(t, 4 * i);
        assert_eq!(sg, 4 * i + 1);
    }
    let c = clock_times(&ReinforcementSchedule::constant(0.9).unwrap(), 10);
    assert_eq!(c.sigma, (2..=10).collect::<Vec<_>>());
}

#[test]
fn leading_coefficient_is_martingale_in_simulation() {
    let m = InteractionMatrix::mean_field(2).unwrap();
    let s = ReinforcementSchedule::power(1.0, 1.0).unwrap();
    let st = SpectralStructure::analyze(&m).unwrap();
    let z0 = vec![0.3, 0.8];
    let start = st.leading_coefficient(&z0);
    let reps = 100_000u64;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for i in 0..reps {
        let mut state = SystemState::with_stream(z0.clone(), 99, i).unwrap();
        for _ in 0..100 {
            step(&mut state, &m, &s).unwrap();
        }
        let t = st.leading_coefficient(&state.z);
        sum += t;
        sum_sq += t * t;
    }
    let mean = sum / reps as f64;
    let var = sum_sq / reps as f64 - mean * mean;
    let se = (var / reps as f64).sqrt();
    assert!((mean - start).abs() < 4.0 * se, "{mean} vs {start} (se {se})");
}

#[test]
fn replicate_streams_are_reproducible() {
    let m = example1_matrix();
    let s = ReinforcementSchedule::power(1.0, 0.75).unwrap();
    let a = simulate(&[0.2, 0.5, 0.8], &m, &s, 300, 4, CheckpointPlan::default()).unwrap();
    let b = simulate(&[0.2, 0.5, 0.8], &m, &s, 300, 4, CheckpointPlan::default()).unwrap();
    assert_eq!(a, b);
    let c = simulate(&[0.2, 0.5, 0.8], &m, &s, 300, 5, CheckpointPlan::default()).unwrap();
    assert_ne!(a.last().z, c.last().z);
}
