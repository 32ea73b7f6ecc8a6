//! Rating-level calculus for scoring images and videos with multimodal
//! language models.
//!
//! Training labels are produced by mapping mean opinion scores onto five
//! text-defined levels ([`level`]), and compiled into chat samples
//! ([`compile`]). At inference the model's logits for the five level tokens
//! are turned back into a continuous score by a close-set softmax and an
//! expected value ([`decode`]), which mirrors how a human panel's MOS is
//! computed from level frequencies ([`sim`]). [`metrics`] scores predictions
//! against labels and [`provider`] abstracts where logits come from.
//!
//! The numeric modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix them to `f64`.

pub mod compile;
pub mod decode;
mod error;
pub mod level;
pub mod metrics;
pub mod provider;
mod scalar;
pub mod sim;
#[cfg(feature = "stub")]
pub mod stub;
pub mod wire;

pub use error::{Error, Result};
pub use level::{RatingLevel, LEVEL_COUNT};
pub use scalar::Scalar;

pub type ScoreRange = level::ScoreRange<f64>;
pub type LevelScale = level::LevelScale<f64>;
pub type ScoredItem = level::ScoredItem<f64>;
pub type LevelLogits = decode::LevelLogits<f64>;
pub type LevelProbabilities = decode::LevelProbabilities<f64>;
pub type DecodedScore = decode::DecodedScore<f64>;
pub type PairedSeries = metrics::PairedSeries<f64>;
