use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shallow_relu::exact::{train_exact, Strategy as Search, TrainConfig};
use shallow_relu::synth::planted_net;
use shallow_relu::{squared_loss, Dataset, Error};

fn random_dataset(seed: u64, n: usize, d: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..2.0)).collect();
    Dataset::from_rows(&xs, &ys).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn branch_and_bound_matches_exhaustive(seed in any::<u64>(), n in 1usize..=4) {
        let data = random_dataset(seed, n, 1);
        let bb = train_exact(&data, &TrainConfig::default()).unwrap();
        let ex = train_exact(&data, &TrainConfig { strategy: Search::Exhaustive, ..TrainConfig::default() }).unwrap();
        prop_assert!(bb.certificate && ex.certificate);
        prop_assert!((bb.loss - ex.loss).abs() <= 1e-8 * (1.0 + ex.loss), "{} vs {}", bb.loss, ex.loss);
        prop_assert!((squared_loss(&bb.net, &data).unwrap() - bb.loss).abs() <= 1e-12 * (1.0 + bb.loss));
    }

    #[test]
    fn decision_mode_agrees_with_optimization(seed in any::<u64>(), n in 1usize..=6, d in 1usize..=2, planted in any::<bool>()) {
        let data = if planted {
            planted_net(&mut ChaCha8Rng::seed_from_u64(seed), n, d).unwrap().0
        } else {
            random_dataset(seed, n, d)
        };
        let full = train_exact(&data, &TrainConfig::default()).unwrap();
        let dec = train_exact(&data, &TrainConfig::decision(1e-8)).unwrap();
        prop_assert_eq!(full.loss <= 1e-8, dec.loss <= 1e-8);
        if planted {
            prop_assert!(dec.loss <= 1e-8);
        }
    }

    #[test]
    fn threads_and_order_do_not_change_the_optimum(seed in any::<u64>(), n in 1usize..=6) {
        let data = random_dataset(seed, n, 2);
        let base = train_exact(&data, &TrainConfig::default()).unwrap();
        let other = train_exact(&data, &TrainConfig { threads: 2, order_seed: Some(seed), ..TrainConfig::default() }).unwrap();
        prop_assert!((base.loss - other.loss).abs() <= 1e-8 * (1.0 + base.loss));
    }
}

#[test]
fn budget_is_enforced() {
    let data = random_dataset(3, 8, 2);
    let cfg = TrainConfig {
        budget: 5,
        ..TrainConfig::default()
    };
    match train_exact(&data, &cfg) {
        Err(Error::BudgetExceeded { budget, .. }) => assert_eq!(budget, 5),
        other => panic!("expected a budget refusal, got {other:?}"),
    }
}

#[test]
fn subproblem_shapes_are_fixed() {
    for d in 1..=3 {
        let data = random_dataset(d as u64, 6, d);
        let r = train_exact(&data, &TrainConfig::default()).unwrap();
        assert_eq!(r.qp.min_vars, 2 * d + 3);
        assert_eq!(r.qp.max_vars, 2 * d + 3);
        assert!(r.qp.max_constraints <= 3 * data.len() + 1);
        assert_eq!(r.qp.shape_violations, 0);
    }
}
