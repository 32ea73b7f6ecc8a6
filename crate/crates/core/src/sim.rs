//! Simulated rating panels: raters pick a level (type 1) or move a slider
//! (type 2), and the panel's mean opinion score is aggregated from them.
//!
//! Randomness comes from ChaCha8 seeded with the panel seed, with Gaussian
//! perturbation of the latent score, so panels reproduce on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::decode::LevelLogits;
use crate::scalar::Scalar;
use crate::error::{Error, Result};
use crate::level::{score_to_level, LevelScale, RatingLevel, ScoreRange, LEVEL_COUNT};
use crate::wire::NamedLevels;

/// Identifier of the generator behind [`simulate_panel`].
pub const PANEL_RNG: &str = "chacha8";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RaterMode {
    /// Each rater picks one of the five levels.
    Type1,
    /// Each rater drags a level-guided slider over `[1, 5]`.
    Type2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelConfig {
    pub rater_count: usize,
    pub mode: RaterMode,
    pub true_score: f64,
    pub noise_scale: f64,
    pub seed: u64,
}

impl PanelConfig {
    pub fn new(rater_count: usize, mode: RaterMode, true_score: f64, noise_scale: f64, seed: u64) -> Result<Self> {
        let config = Self { rater_count, mode, true_score, noise_scale, seed };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rater_count == 0 {
            return Err(Error::InvalidParameter("rater_count must be at least 1".into()));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return Err(Error::InvalidParameter("noise_scale must be finite and non-negative".into()));
        }
        ScoreRange::<f64>::canonical().check(self.true_score)
    }
}

/// A single rater's answer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rating {
    Level(RatingLevel),
    Slider(f64),
}

impl Rating {
    pub fn value(&self) -> f64 {
        match *self {
            Rating::Level(level) => f64::from(level.ordinal()),
            Rating::Slider(v) => v,
        }
    }
}

/// Aggregate of a panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelResult {
    /// Share of raters per level; present for type-1 panels only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<NamedLevels<f64>>,
    pub mos: f64,
}

impl PanelResult {
    /// Type-1 aggregate from level frequencies: `Σ f_i · G(l_i)`.
    pub fn from_frequencies(frequencies: [f64; LEVEL_COUNT]) -> Result<Self> {
        if frequencies.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::InvalidParameter("frequencies must be non-negative".into()));
        }
        let total: f64 = frequencies.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("frequencies sum to {total}, not 1")));
        }
        let scale = LevelScale::<f64>::canonical();
        let mos = RatingLevel::ALL
            .iter()
            .map(|&l| frequencies[l.index()] * scale.value(l))
            .sum();
        Ok(Self {
            frequencies: Some(NamedLevels::from_ascending(frequencies)),
            mos,
        })
    }

    fn from_levels(ratings: &[Rating]) -> Self {
        let mut counts = [0usize; LEVEL_COUNT];
        for rating in ratings {
            if let Rating::Level(level) = rating {
                counts[level.index()] += 1;
            }
        }
        let n = ratings.len() as f64;
        Self::from_frequencies(counts.map(|c| c as f64 / n)).expect("counts form a distribution")
    }

    fn from_sliders(ratings: &[Rating]) -> Self {
        let mos = ratings.iter().map(Rating::value).sum::<f64>() / ratings.len() as f64;
        Self {
            frequencies: None,
            mos: mos.clamp(1.0, 5.0),
        }
    }
}

/// Runs one panel. Raters are drawn sequentially from a single seeded stream.
pub fn simulate_panel(config: &PanelConfig) -> (Vec<Rating>, PanelResult) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let canonical = ScoreRange::<f64>::canonical();
    let ratings: Vec<Rating> = (0..config.rater_count)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            let latent = (config.true_score + config.noise_scale * z).clamp(1.0, 5.0);
            match config.mode {
                RaterMode::Type1 => Rating::Level(score_to_level(latent, &canonical).expect("clamped latent")),
                RaterMode::Type2 => Rating::Slider(latent),
            }
        })
        .collect();
    let result = match config.mode {
        RaterMode::Type1 => PanelResult::from_levels(&ratings),
        RaterMode::Type2 => PanelResult::from_sliders(&ratings),
    };
    (ratings, result)
}

/// Log-frequencies as level logits; levels nobody chose are left out of the support.
pub fn frequencies_to_logits(result: &PanelResult) -> Result<LevelLogits<f64>> {
    let frequencies = result
        .frequencies
        .ok_or_else(|| Error::InvalidParameter("slider panels carry no level frequencies".into()))?;
    let values = frequencies
        .to_ascending()
        .map(|f| if f > 0.0 { Some(f.portable_ln()) } else { None });
    LevelLogits::with_absent(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::decode;

    #[test]
    fn zero_noise_panel_is_unanimous() {
        let config = PanelConfig::new(100, RaterMode::Type1, 4.0, 0.0, 7).unwrap();
        let (ratings, result) = simulate_panel(&config);
        assert!(ratings.iter().all(|r| *r == Rating::Level(RatingLevel::Good)));
        assert_eq!(result.mos, 4.0);
    }

    #[test]
    fn zero_noise_on_every_level_value() {
        for v in 1..=5 {
            let config = PanelConfig::new(3, RaterMode::Type1, v as f64, 0.0, 0).unwrap();
            assert_eq!(simulate_panel(&config).1.mos, v as f64);
        }
    }

    #[test]
    fn hand_computed_mos() {
        let r = PanelResult::from_frequencies([0.0, 0.0, 0.5, 0.5, 0.0]).unwrap();
        assert_eq!(r.mos, 3.5);
        // frequencies equal to the softmax of a printed logit row
        let logits = LevelLogits::new([9.477, 11.60, 14.63, 18.38, 18.03]).unwrap();
        let p = crate::decode::closeset_softmax(&logits);
        let table = PanelResult::from_frequencies(*p.values()).unwrap();
        assert!((table.mos - 4.3926).abs() < 1e-3);
    }

    #[test]
    fn logits_from_frequencies() {
        let uniform = PanelResult::from_frequencies([0.2; 5]).unwrap();
        let d = decode(&frequencies_to_logits(&uniform).unwrap(), &LevelScale::canonical());
        assert!((d.score - 3.0).abs() < 1e-12);

        let good = PanelResult::from_frequencies([0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        let d = decode(&frequencies_to_logits(&good).unwrap(), &LevelScale::canonical());
        assert_eq!(d.score, 4.0);
    }

    #[test]
    fn slider_panels_have_no_frequencies() {
        let config = PanelConfig::new(10, RaterMode::Type2, 2.5, 0.3, 1).unwrap();
        let (ratings, result) = simulate_panel(&config);
        assert!(ratings.iter().all(|r| matches!(r, Rating::Slider(v) if (1.0..=5.0).contains(v))));
        assert!(result.frequencies.is_none());
        assert!(frequencies_to_logits(&result).is_err());
    }

    #[test]
    fn seeds_reproduce() {
        let config = PanelConfig::new(50, RaterMode::Type1, 3.3, 0.8, 99).unwrap();
        assert_eq!(simulate_panel(&config), simulate_panel(&config));
        let other = PanelConfig { seed: 100, ..config };
        assert_ne!(simulate_panel(&config).0, simulate_panel(&other).0);
    }

    #[test]
    fn invalid_configs() {
        assert!(PanelConfig::new(0, RaterMode::Type1, 3.0, 0.1, 0).is_err());
        assert!(PanelConfig::new(5, RaterMode::Type1, 3.0, -0.1, 0).is_err());
        assert!(PanelConfig::new(5, RaterMode::Type2, 5.5, 0.1, 0).is_err());
    }
}
