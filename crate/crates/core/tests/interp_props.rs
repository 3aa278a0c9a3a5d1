use proptest::prelude::*;
use shallow_relu::interp::{fit_overparam, verify_interpolation};
use shallow_relu::Dataset;

fn dataset() -> impl Strategy<Value = Dataset> {
    (1usize..=6, 1usize..=30).prop_flat_map(|(d, n)| {
        (
            prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_filter_map("distinct inputs", |(xs, ys)| {
                let distinct = xs.iter().enumerate().all(|(i, a)| xs[..i].iter().all(|b| a != b));
                let ys: Vec<f64> = ys.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
                distinct.then(|| Dataset::from_rows(&xs, &ys).unwrap())
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fits_every_point_with_at_most_n_nodes(data in dataset(), seed in any::<u64>()) {
        let net = fit_overparam(&data, seed).unwrap();
        prop_assert!(net.node_count() <= data.len());
        prop_assert!(verify_interpolation(&net, &data, 1e-8));
    }

    #[test]
    fn same_seed_same_network(data in dataset(), seed in any::<u64>()) {
        prop_assert_eq!(fit_overparam(&data, seed).unwrap(), fit_overparam(&data, seed).unwrap());
    }
}
