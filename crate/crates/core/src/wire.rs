//! Named per-level records as they appear in line-delimited files.

use serde::{Deserialize, Serialize};

use crate::level::{RatingLevel, LEVEL_COUNT};

/// One value per level, serialized with the level labels as keys
/// (best level first).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedLevels<T> {
    pub excellent: T,
    pub good: T,
    pub fair: T,
    pub poor: T,
    pub bad: T,
}

impl<T: Copy> NamedLevels<T> {
    /// From values in ascending level order (bad first).
    pub fn from_ascending(values: [T; LEVEL_COUNT]) -> Self {
        let [bad, poor, fair, good, excellent] = values;
        Self { excellent, good, fair, poor, bad }
    }

    pub fn to_ascending(self) -> [T; LEVEL_COUNT] {
        [self.bad, self.poor, self.fair, self.good, self.excellent]
    }

    pub fn get(&self, level: RatingLevel) -> T {
        self.to_ascending()[level.index()]
    }
}
