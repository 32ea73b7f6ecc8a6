//! Close-set softmax over the five level tokens and the expected-score readout.
//!
//! A language model scores every token of its vocabulary; only the logits of
//! the five level words are kept. Softmax over that closed set gives a
//! distribution `p` over levels, and the predicted score is `Σ p_i · G(l_i)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::level::{LevelScale, RatingLevel, ScoreRange, LEVEL_COUNT};
use crate::scalar::Scalar;

/// Raw logits of the five level tokens.
///
/// A level may be absent, in which case it receives probability exactly zero.
/// Provider responses always carry all five; absent slots come from converting
/// empirical frequencies that contain zeros.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelLogits<T> {
    values: [Option<T>; LEVEL_COUNT],
}

impl<T: Scalar> LevelLogits<T> {
    /// Logits in ascending level order (bad first).
    pub fn new(values: [T; LEVEL_COUNT]) -> Result<Self> {
        Self::with_absent(values.map(Some))
    }

    /// Logits where `None` marks a level outside the support.
    pub fn with_absent(values: [Option<T>; LEVEL_COUNT]) -> Result<Self> {
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("logit"));
        }
        if values.iter().all(Option::is_none) {
            return Err(Error::EmptyDistribution);
        }
        Ok(Self { values })
    }

    /// Builds logits from `(level, logit)` pairs; every level must appear exactly once.
    pub fn from_pairs<I: IntoIterator<Item = (RatingLevel, T)>>(pairs: I) -> Result<Self> {
        let mut values = [None; LEVEL_COUNT];
        let mut seen = 0;
        for (level, logit) in pairs {
            if values[level.index()].replace(logit).is_some() {
                return Err(Error::InvalidParameter(format!("level {level} given twice")));
            }
            seen += 1;
        }
        if seen != LEVEL_COUNT {
            return Err(Error::InvalidParameter(format!(
                "expected {LEVEL_COUNT} level logits, got {seen}"
            )));
        }
        Self::with_absent(values)
    }

    pub fn get(&self, level: RatingLevel) -> Option<T> {
        self.values[level.index()]
    }

    pub fn values(&self) -> &[Option<T>; LEVEL_COUNT] {
        &self.values
    }

    /// True when every level carries a logit.
    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// Adds `shift` to every present logit.
    pub fn shifted(&self, shift: T) -> Self {
        Self {
            values: self.values.map(|v| v.map(|x| x + shift)),
        }
    }

    fn max(&self) -> T {
        self.values
            .iter()
            .flatten()
            .fold(T::neg_infinity(), |acc, &v| acc.max(v))
    }
}

/// Probability of each level; non-negative and summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelProbabilities<T> {
    values: [T; LEVEL_COUNT],
}

impl<T: Scalar> LevelProbabilities<T> {
    pub fn new(values: [T; LEVEL_COUNT]) -> Result<Self> {
        if values.iter().any(|p| !p.is_finite() || *p < T::zero()) {
            return Err(Error::InvalidParameter("probabilities must be finite and non-negative".into()));
        }
        let sum = values.iter().fold(T::zero(), |acc, &p| acc + p);
        let tolerance = T::of(1e-9).max(T::epsilon() * T::of(16.0));
        if (sum - T::one()).abs() > tolerance {
            return Err(Error::InvalidParameter(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self { values })
    }

    pub fn get(&self, level: RatingLevel) -> T {
        self.values[level.index()]
    }

    pub fn values(&self) -> &[T; LEVEL_COUNT] {
        &self.values
    }

    /// Most and second-most probable levels; ties go to the higher ordinal.
    pub fn top_two(&self) -> (RatingLevel, RatingLevel) {
        let mut order = RatingLevel::ALL;
        order.sort_by(|a, b| {
            self.get(*b)
                .partial_cmp(&self.get(*a))
                .expect("finite probabilities")
                .then(b.cmp(a))
        });
        (order[0], order[1])
    }
}

/// A decoded prediction on the scale's own units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodedScore<T> {
    pub score: T,
    pub probabilities: LevelProbabilities<T>,
    pub top: RatingLevel,
    pub second: RatingLevel,
}

impl<T> DecodedScore<T> {
    /// Whether the two most probable levels are neighbours on the scale.
    ///
    /// Trained models are observed to keep these adjacent; this is reported,
    /// never enforced.
    pub fn adjacent(&self) -> bool {
        self.top.is_adjacent(self.second)
    }
}

/// Softmax restricted to the five level tokens.
pub fn closeset_softmax<T: Scalar>(logits: &LevelLogits<T>) -> LevelProbabilities<T> {
    let max = logits.max();
    let weights = logits.values.map(|v| v.map_or(T::zero(), |x| (x - max).portable_exp()));
    let total = weights.iter().fold(T::zero(), |acc, &w| acc + w);
    LevelProbabilities {
        values: weights.map(|w| w / total),
    }
}

/// Probability-weighted average of the level values.
pub fn expected_score<T: Scalar>(probs: &LevelProbabilities<T>, scale: &LevelScale<T>) -> T {
    RatingLevel::ALL
        .iter()
        .fold(T::zero(), |acc, &level| acc + probs.get(level) * scale.value(level))
}

/// Close-set softmax followed by the expected score.
pub fn decode<T: Scalar>(logits: &LevelLogits<T>, scale: &LevelScale<T>) -> DecodedScore<T> {
    let probabilities = closeset_softmax(logits);
    let (top, second) = probabilities.top_two();
    DecodedScore {
        score: expected_score(&probabilities, scale),
        probabilities,
        top,
        second,
    }
}

/// Two-level special case: `e^good / (e^good + e^poor)`.
pub fn binary_softmax_score<T: Scalar>(logit_good: T, logit_poor: T) -> Result<T> {
    if !logit_good.is_finite() || !logit_poor.is_finite() {
        return Err(Error::NonFinite("logit"));
    }
    Ok(T::one() / (T::one() + (logit_poor - logit_good).portable_exp()))
}

/// `-ln p_target` under the close-set softmax. Infinite when the target is absent.
pub fn level_cross_entropy<T: Scalar>(logits: &LevelLogits<T>, target: RatingLevel) -> T {
    let Some(target_logit) = logits.get(target) else {
        return T::infinity();
    };
    let max = logits.max();
    let sum = logits
        .values
        .iter()
        .flatten()
        .fold(T::zero(), |acc, &x| acc + (x - max).portable_exp());
    (max + sum.portable_ln() - target_logit).max(T::zero())
}

/// Affine map of a score from one range onto another.
pub fn rescale_score<T: Scalar>(score: T, from: &ScoreRange<T>, to: &ScoreRange<T>) -> Result<T> {
    from.check(score)?;
    Ok(to.min() + (score - from.min()) / from.width() * to.width())
}
