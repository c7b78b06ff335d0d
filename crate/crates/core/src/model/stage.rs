//! Incremental release stages and their operating conditions.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("release stage must be between 1 and 5, got {0}")]
pub struct StageOutOfRange(pub i64);

/// Release stage number, always within `1..=5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StageNumber(u8);

impl StageNumber {
    pub const FIRST: StageNumber = StageNumber(1);
    pub const LAST: StageNumber = StageNumber(5);

    pub fn new(value: i64) -> Result<Self, StageOutOfRange> {
        if (1..=5).contains(&value) {
            Ok(StageNumber(value as u8))
        } else {
            Err(StageOutOfRange(value))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn previous(self) -> Option<StageNumber> {
        (self.0 > 1).then(|| StageNumber(self.0 - 1))
    }

    pub fn next(self) -> Option<StageNumber> {
        (self.0 < 5).then(|| StageNumber(self.0 + 1))
    }

    pub fn all() -> impl Iterator<Item = StageNumber> {
        (1..=5).map(StageNumber)
    }

    pub fn operating_mode(self) -> OperatingMode {
        if self.0 <= 2 {
            OperatingMode::ManualOperation
        } else {
            OperatingMode::AutomatedOperation
        }
    }
}

/// Shorthand for literals known to be in range; panics otherwise.
pub fn stage(value: u8) -> StageNumber {
    StageNumber::new(value as i64).expect("stage literal out of range")
}

impl fmt::Display for StageNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for StageNumber {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.0)
    }
}

impl<'de> Deserialize<'de> for StageNumber {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = i64::deserialize(deserializer)?;
        StageNumber::new(raw).map_err(serde::de::Error::custom)
    }
}

/// True when `stages` is `{1..k}` for some `k` (including the empty set).
pub fn is_stage_prefix<'a>(stages: impl IntoIterator<Item = &'a StageNumber>) -> bool {
    let mut values: Vec<u8> = stages.into_iter().map(|s| s.get()).collect();
    values.sort_unstable();
    values.dedup();
    values.iter().enumerate().all(|(i, v)| *v as usize == i + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatingMode {
    ManualOperation,
    AutomatedOperation,
}

impl fmt::Display for OperatingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OperatingMode::ManualOperation => "Manual Operation",
            OperatingMode::AutomatedOperation => "Automated Operation",
        })
    }
}

/// What a granted stage permits the prototype to do.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageDefinition {
    pub number: StageNumber,
    pub operating_mode: OperatingMode,
    pub description: String,
    pub operating_conditions: String,
}

impl StageDefinition {
    /// The five-stage ladder used unless a repository overrides it.
    pub fn standard_ladder() -> Vec<StageDefinition> {
        let rows = [
            (
                "Manual controlled rides on test sites with speeds of up to approximately 5 km/h",
                "closed test site; manual control by a driver; walking speed only",
            ),
            (
                "Manual controlled rides on test sites",
                "closed test site; manual control by a driver",
            ),
            (
                "Testing of (automated driving) functions that require safety drivers as a fallback level in a controlled environment",
                "controlled environment; automated functions active; safety driver on board as fallback",
            ),
            (
                "Testing the demonstration without access for guests",
                "demonstration course; automated operation; no guests on board or on the course",
            ),
            (
                "Public demonstration on a test track",
                "test track; automated operation; guests and public present",
            ),
        ];
        rows.iter()
            .zip(StageNumber::all())
            .map(|((description, conditions), number)| StageDefinition {
                number,
                operating_mode: number.operating_mode(),
                description: description.to_string(),
                operating_conditions: conditions.to_string(),
            })
            .collect()
    }
}
