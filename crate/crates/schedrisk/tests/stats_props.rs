//! Statistics properties: the summary ordering chain, permutation
//! invariance, scale equivariance, and the right-skew signature of
//! asymmetric triangular sampling.

use proptest::prelude::*;

use schedrisk::model::DurationDistribution;
use schedrisk::sim::{event_uniform, inverse_cdf};
use schedrisk::stats::summarize;

fn arb_samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1000.0f64, 1..200)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn summary_ordering_chain_holds(samples in arb_samples()) {
        let s = summarize(&samples).unwrap();
        prop_assert!(s.min <= s.whisker_low);
        prop_assert!(s.whisker_low <= s.q1);
        prop_assert!(s.q1 <= s.median);
        prop_assert!(s.median <= s.q3);
        prop_assert!(s.q3 <= s.whisker_high);
        prop_assert!(s.whisker_high <= s.max);
        prop_assert!(s.iqr >= 0.0);
    }

    #[test]
    fn summary_is_permutation_invariant(samples in arb_samples(), seed in any::<u64>()) {
        let mut shuffled = samples.clone();
        // Fisher-Yates driven by the counter-based generator.
        for i in (1..shuffled.len()).rev() {
            let u = event_uniform(seed, i as u64, "shuffle", 0);
            shuffled.swap(i, (u * (i + 1) as f64) as usize);
        }
        prop_assert_eq!(summarize(&samples).unwrap(), summarize(&shuffled).unwrap());
    }

    #[test]
    fn summary_is_scale_equivariant(samples in arb_samples(), factor in 0.001..1000.0f64) {
        let scaled: Vec<f64> = samples.iter().map(|x| factor * x).collect();
        let base = summarize(&samples).unwrap();
        let s = summarize(&scaled).unwrap();
        let close = |a: f64, b: f64| (a - factor * b).abs() <= 1e-9 * (factor * b).abs().max(1e-9);
        prop_assert!(close(s.median, base.median));
        prop_assert!(close(s.mean, base.mean));
        prop_assert!(close(s.sample_std, base.sample_std));
        prop_assert!(close(s.q1, base.q1));
        prop_assert!(close(s.q3, base.q3));
        prop_assert_eq!(s.outliers_low, base.outliers_low);
        prop_assert_eq!(s.outliers_high, base.outliers_high);
    }

    #[test]
    fn percent_reduction_is_rescale_invariant(
        baseline in 0.001..1000.0f64,
        transformed in 0.0..1000.0f64,
        factor in 0.001..1000.0f64,
    ) {
        let a = schedrisk::percent_reduction(baseline, transformed).unwrap();
        let b = schedrisk::percent_reduction(factor * baseline, factor * transformed).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }
}

#[test]
fn right_tailed_triangular_pushes_mean_above_median() {
    // Mode far closer to the minimum than to the maximum: the long right
    // tail drags the mean above the median.
    let dist = DurationDistribution::Triangular {
        min: 0.0,
        mode: 7.0,
        max: 28.0,
    };
    let n = 100_000u64;
    let mut samples = Vec::with_capacity(n as usize);
    for i in 0..n {
        samples.push(inverse_cdf(&dist, event_uniform(7, i, "skew", 0)));
    }
    let s = summarize(&samples).unwrap();
    assert!(
        s.mean > s.median,
        "mean {} should exceed median {} for a right-skewed shape",
        s.mean,
        s.median
    );
    // Closed-form values: mean 35/3, median 28 - sqrt(294).
    assert!((s.mean - 35.0 / 3.0).abs() < 0.1);
    assert!((s.median - (28.0 - 294.0f64.sqrt())).abs() < 0.1);
}
