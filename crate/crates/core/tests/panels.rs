use qalign_core::decode::decode;
use qalign_core::level::LevelScale;
use qalign_core::sim::{frequencies_to_logits, simulate_panel, PanelConfig, RaterMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn decoding_panel_frequencies_reproduces_mos() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let scale = LevelScale::<f64>::canonical();
    for seed in 0..1000u64 {
        let config = PanelConfig::new(
            rng.gen_range(1..=500),
            RaterMode::Type1,
            rng.gen_range(1.0..=5.0),
            rng.gen_range(0.0..=1.0),
            seed,
        )
        .unwrap();
        let (ratings, result) = simulate_panel(&config);
        assert_eq!(ratings.len(), config.rater_count);
        assert!((1.0..=5.0).contains(&result.mos));
        let decoded = decode(&frequencies_to_logits(&result).unwrap(), &scale);
        assert!((decoded.score - result.mos).abs() < 1e-9, "seed {seed}");
    }
}

#[test]
fn slider_mos_converges() {
    // |mos - true| <= 3 sigma / sqrt(n) should hold for ~99.7% of panels
    let (n, sigma) = (400usize, 0.5);
    let mut passes = 0;
    let trials = 500;
    for seed in 0..trials {
        let config = PanelConfig::new(n, RaterMode::Type2, 3.2, sigma, seed).unwrap();
        let (_, result) = simulate_panel(&config);
        if (result.mos - 3.2).abs() <= 3.0 * sigma / (n as f64).sqrt() {
            passes += 1;
        }
    }
    assert!(passes as f64 / trials as f64 >= 0.99, "{passes}/{trials}");
}
