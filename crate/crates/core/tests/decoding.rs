use proptest::prelude::*;
use qalign_core::decode::{
    binary_softmax_score, closeset_softmax, decode, expected_score, level_cross_entropy, LevelLogits,
};
use qalign_core::level::{LevelScale, RatingLevel};

fn logits_strategy() -> impl Strategy<Value = [f64; 5]> {
    prop::array::uniform5(-30.0f64..30.0)
}

fn canonical() -> LevelScale<f64> {
    LevelScale::canonical()
}

proptest! {
    #[test]
    fn shift_invariance(values in logits_strategy(), shift in -500.0f64..500.0) {
        let logits = LevelLogits::new(values).unwrap();
        let a = decode(&logits, &canonical());
        let b = decode(&logits.shifted(shift), &canonical());
        prop_assert!((a.score - b.score).abs() < 1e-9);
        for level in RatingLevel::ALL {
            prop_assert!((a.probabilities.get(level) - b.probabilities.get(level)).abs() < 1e-9);
        }
        // top/second only comparable when the ranking is not a near-tie
        let p = a.probabilities;
        let mut sorted = p.values().to_vec();
        sorted.sort_by(|x, y| y.partial_cmp(x).unwrap());
        if sorted[0] - sorted[1] > 1e-9 && sorted[1] - sorted[2] > 1e-9 {
            prop_assert_eq!((a.top, a.second), (b.top, b.second));
        }
    }

    #[test]
    fn probabilities_are_a_distribution(values in logits_strategy()) {
        let p = closeset_softmax(&LevelLogits::new(values).unwrap());
        let sum: f64 = p.values().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(p.values().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn score_stays_on_scale(values in logits_strategy()) {
        let d = decode(&LevelLogits::new(values).unwrap(), &canonical());
        prop_assert!((1.0..=5.0).contains(&d.score));
        prop_assert_ne!(d.top, d.second);
        prop_assert!(d.probabilities.get(d.top) >= d.probabilities.get(d.second));
    }

    #[test]
    fn raising_excellent_raises_score(values in prop::array::uniform5(-10.0f64..10.0), bump in 0.01f64..5.0) {
        let before = decode(&LevelLogits::new(values).unwrap(), &canonical()).score;
        let mut raised = values;
        raised[4] += bump;
        let after = decode(&LevelLogits::new(raised).unwrap(), &canonical()).score;
        prop_assert!(after > before);
    }

    #[test]
    fn two_level_expected_score_matches_binary(good in -50.0f64..50.0, poor in -50.0f64..50.0) {
        let scale = LevelScale::new([0.0, 1.0, 1.5, 2.0, 3.0]).unwrap();
        let logits = LevelLogits::with_absent([None, Some(poor), None, Some(good), None]).unwrap();
        let s2 = expected_score(&closeset_softmax(&logits), &scale);
        prop_assert!((s2 - (1.0 + binary_softmax_score(good, poor).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_is_negative_log_probability(values in logits_strategy(), idx in 0usize..5) {
        let logits = LevelLogits::new(values).unwrap();
        let target = RatingLevel::from_index(idx).unwrap();
        let ce = level_cross_entropy(&logits, target);
        let p = closeset_softmax(&logits).get(target);
        prop_assert!(ce >= 0.0);
        if p > 1e-300 {
            prop_assert!((ce - -p.ln()).abs() < 1e-9 * ce.max(1.0));
        }
    }
}

#[test]
fn score_reaches_bounds_only_when_degenerate() {
    let nearly = LevelLogits::new([-10.0, -10.0, -10.0, -10.0, 10.0]).unwrap();
    let d = decode(&nearly, &canonical());
    assert!(d.score < 5.0);
    let exact = LevelLogits::with_absent([None, None, None, None, Some(0.0)]).unwrap();
    assert_eq!(decode(&exact, &canonical()).score, 5.0);
}
