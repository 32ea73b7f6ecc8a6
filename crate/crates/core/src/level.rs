//! Text-defined rating levels and the equidistant score/level partition.
//!
//! Scores inside a [`ScoreRange`] `[m, M]` are split into five intervals of
//! width `(M - m) / 5`. Interval `i` is `(m + (i-1)w, m + iw]`; the bottom
//! edge `m` itself belongs to [`RatingLevel::Bad`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{self, PairedSeries};
use crate::scalar::Scalar;

/// Number of rating levels on the ITU scale.
pub const LEVEL_COUNT: usize = 5;

/// One of the five ITU rating levels, ordered from worst to best.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatingLevel {
    Bad = 1,
    Poor = 2,
    Fair = 3,
    Good = 4,
    Excellent = 5,
}

impl RatingLevel {
    /// All levels in ascending ordinal order.
    pub const ALL: [RatingLevel; LEVEL_COUNT] = [
        RatingLevel::Bad,
        RatingLevel::Poor,
        RatingLevel::Fair,
        RatingLevel::Good,
        RatingLevel::Excellent,
    ];

    pub fn ordinal(self) -> u8 {
        self as u8
    }

    /// Zero-based position, usable as an array index.
    pub fn index(self) -> usize {
        self as usize - 1
    }

    pub fn from_ordinal(ordinal: u8) -> Option<Self> {
        match ordinal {
            1..=5 => Some(Self::ALL[ordinal as usize - 1]),
            _ => None,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            RatingLevel::Bad => "bad",
            RatingLevel::Poor => "poor",
            RatingLevel::Fair => "fair",
            RatingLevel::Good => "good",
            RatingLevel::Excellent => "excellent",
        }
    }

    /// True when the two levels differ by exactly one ordinal step.
    pub fn is_adjacent(self, other: RatingLevel) -> bool {
        self.ordinal().abs_diff(other.ordinal()) == 1
    }
}

impl fmt::Display for RatingLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for RatingLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|level| level.label() == s)
            .ok_or_else(|| Error::UnknownLevel(s.to_owned()))
    }
}

/// The reverse mapping from levels to numeric values.
///
/// The canonical scale maps the `i`-th level to `i`, so `fair` is 3 and `bad` is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelScale<T> {
    values: [T; LEVEL_COUNT],
}

impl<T: Scalar> LevelScale<T> {
    pub fn canonical() -> Self {
        Self {
            values: std::array::from_fn(|i| T::of_usize(i + 1)),
        }
    }

    /// Builds a scale from explicit values, which must be finite and strictly increasing.
    pub fn new(values: [T; LEVEL_COUNT]) -> Result<Self> {
        let finite = values.iter().all(|v| v.is_finite());
        let increasing = values.windows(2).all(|w| w[0] < w[1]);
        if finite && increasing {
            Ok(Self { values })
        } else {
            Err(Error::InvalidScale)
        }
    }

    pub fn value(&self, level: RatingLevel) -> T {
        self.values[level.index()]
    }

    pub fn values(&self) -> &[T; LEVEL_COUNT] {
        &self.values
    }

    pub fn lowest(&self) -> T {
        self.values[0]
    }

    pub fn highest(&self) -> T {
        self.values[LEVEL_COUNT - 1]
    }
}

impl<T: Scalar> Default for LevelScale<T> {
    fn default() -> Self {
        Self::canonical()
    }
}

/// Level value under `scale`.
pub fn level_value<T: Scalar>(level: RatingLevel, scale: &LevelScale<T>) -> T {
    scale.value(level)
}

/// Closed score interval `[min, max]` of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRange<T>", bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct ScoreRange<T> {
    min: T,
    max: T,
}

#[derive(Deserialize)]
struct RawRange<T> {
    min: T,
    max: T,
}

impl<T: Scalar> TryFrom<RawRange<T>> for ScoreRange<T> {
    type Error = Error;

    fn try_from(raw: RawRange<T>) -> Result<Self> {
        Self::new(raw.min, raw.max)
    }
}

impl<T: Scalar> ScoreRange<T> {
    pub fn new(min: T, max: T) -> Result<Self> {
        if min.is_finite() && max.is_finite() && min < max {
            Ok(Self { min, max })
        } else {
            Err(Error::InvalidRange {
                min: min.to_f64().unwrap_or(f64::NAN),
                max: max.to_f64().unwrap_or(f64::NAN),
            })
        }
    }

    /// The canonical `[1, 5]` scale that level values live on.
    pub fn canonical() -> Self {
        Self {
            min: T::one(),
            max: T::of(5.0),
        }
    }

    /// Range spanned by the observed scores.
    pub fn empirical<I: IntoIterator<Item = T>>(scores: I) -> Result<Self> {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for s in scores {
            if !s.is_finite() {
                return Err(Error::NonFinite("score"));
            }
            lo = lo.min(s);
            hi = hi.max(s);
        }
        Self::new(lo, hi)
    }

    pub fn min(&self) -> T {
        self.min
    }

    pub fn max(&self) -> T {
        self.max
    }

    pub fn width(&self) -> T {
        self.max - self.min
    }

    pub fn contains(&self, score: T) -> bool {
        self.min <= score && score <= self.max
    }

    /// Upper edge of the interval for the level with the given ordinal, `m + i(M-m)/5`.
    pub fn upper_edge(&self, ordinal: usize) -> T {
        self.min + T::of_usize(ordinal) * (self.max - self.min) / T::of_usize(LEVEL_COUNT)
    }

    /// Bounds `(lower, upper)` of the interval assigned to `level`: scores with
    /// `lower < s <= upper`, plus `s = lower` for the bottom level. The outer
    /// bounds are exactly `min` and `max`.
    pub fn interval(&self, level: RatingLevel) -> (T, T) {
        let i = level.ordinal() as usize;
        let lower = if i == 1 { self.min } else { self.upper_edge(i - 1) };
        let upper = if i == LEVEL_COUNT { self.max } else { self.upper_edge(i) };
        (lower, upper)
    }

    pub(crate) fn check(&self, score: T) -> Result<()> {
        if !score.is_finite() {
            return Err(Error::NonFinite("score"));
        }
        if !self.contains(score) {
            return Err(Error::OutOfRange {
                score: score.to_f64().unwrap_or(f64::NAN),
                min: self.min.to_f64().unwrap_or(f64::NAN),
                max: self.max.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }
}

/// A score attached to an opaque item identifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem<T> {
    pub id: String,
    pub score: T,
}

impl<T> ScoredItem<T> {
    pub fn new(id: impl Into<String>, score: T) -> Self {
        Self {
            id: id.into(),
            score,
        }
    }
}

/// Maps a score to its rating level under the equidistant five-way partition.
pub fn score_to_level<T: Scalar>(score: T, range: &ScoreRange<T>) -> Result<RatingLevel> {
    range.check(score)?;
    let level = (1..LEVEL_COUNT)
        .find(|&i| score <= range.upper_edge(i))
        .map_or(RatingLevel::Excellent, |i| RatingLevel::ALL[i - 1]);
    Ok(level)
}

/// SRCC and PLCC between original scores and their quantized level values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fidelity<T> {
    pub srcc: T,
    pub plcc: T,
}

/// Measures how much correlation survives the score → level → value round trip.
pub fn conversion_fidelity<T: Scalar>(
    items: &[ScoredItem<T>],
    range: &ScoreRange<T>,
) -> Result<Fidelity<T>> {
    let scale = LevelScale::<T>::canonical();
    let mut quantized = Vec::with_capacity(items.len());
    for item in items {
        quantized.push(scale.value(score_to_level(item.score, range)?));
    }
    let original: Vec<T> = items.iter().map(|item| item.score).collect();
    if original.len() >= 2 && original.iter().all(|&s| s == original[0]) {
        return Err(Error::DegenerateVariance("score"));
    }
    let series = PairedSeries::new(quantized, original)?;
    Ok(Fidelity {
        srcc: metrics::srcc(&series)?,
        plcc: metrics::plcc(&series)?,
    })
}
