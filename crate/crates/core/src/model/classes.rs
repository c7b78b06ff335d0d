//! Risk parameter classes and integrity levels.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Severity, exposure and controllability classes of a hazardous scenario.
///
/// Values are kept raw so that out-of-range input survives parsing and can
/// be reported by validation instead of failing the whole load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RiskParameters {
    pub severity: u8,
    pub exposure: u8,
    pub controllability: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{parameter} class {value} is outside 0..={max}")]
pub struct ClassRangeError {
    pub parameter: &'static str,
    pub value: u8,
    pub max: u8,
}

impl RiskParameters {
    pub const MAX_SEVERITY: u8 = 3;
    pub const MAX_EXPOSURE: u8 = 4;
    pub const MAX_CONTROLLABILITY: u8 = 3;

    pub fn new(severity: u8, exposure: u8, controllability: u8) -> Self {
        RiskParameters { severity, exposure, controllability }
    }

    /// Checks every class against its range, reporting the first offender.
    pub fn check_ranges(&self) -> Result<(), ClassRangeError> {
        let checks = [
            ("severity", self.severity, Self::MAX_SEVERITY),
            ("exposure", self.exposure, Self::MAX_EXPOSURE),
            ("controllability", self.controllability, Self::MAX_CONTROLLABILITY),
        ];
        for (parameter, value, max) in checks {
            if value > max {
                return Err(ClassRangeError { parameter, value, max });
            }
        }
        Ok(())
    }
}

impl fmt::Display for RiskParameters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{} E{} C{}", self.severity, self.exposure, self.controllability)
    }
}

/// Automotive safety integrity level, ordered `QM < A < B < C < D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AsilLevel {
    QM,
    A,
    B,
    C,
    D,
}

impl AsilLevel {
    pub const ALL: [AsilLevel; 5] = [AsilLevel::QM, AsilLevel::A, AsilLevel::B, AsilLevel::C, AsilLevel::D];
}

impl fmt::Display for AsilLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AsilLevel::QM => f.write_str("QM"),
            other => write!(f, "ASIL {other:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("RSIL must be between 0 and 4, got {0}")]
pub struct RsilOutOfRange(pub u8);

/// Research safety integrity level in `0..=4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Rsil(u8);

impl Rsil {
    pub const ZERO: Rsil = Rsil(0);
    pub const MAX: Rsil = Rsil(4);

    pub fn new(level: u8) -> Result<Self, RsilOutOfRange> {
        if level <= 4 {
            Ok(Rsil(level))
        } else {
            Err(RsilOutOfRange(level))
        }
    }

    pub fn level(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Rsil> {
        (0..=4).map(Rsil)
    }

    /// Whether measures have to be defined, implemented and tested.
    pub fn requires_measures(self) -> bool {
        self.0 >= 1
    }

    /// Verbal risk band used in reports.
    pub fn band(self) -> &'static str {
        match self.0 {
            0 => "no additional measures",
            1 => "very low",
            2 => "low",
            3 => "high",
            _ => "very high",
        }
    }
}

impl fmt::Display for Rsil {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RSIL {}", self.0)
    }
}

impl Serialize for Rsil {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.0)
    }
}

impl<'de> Deserialize<'de> for Rsil {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = u8::deserialize(deserializer)?;
        Rsil::new(raw).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_error_names_parameter() {
        let err = RiskParameters::new(1, 5, 1).check_ranges().unwrap_err();
        assert_eq!(err.parameter, "exposure");
        assert!(RiskParameters::new(3, 4, 3).check_ranges().is_ok());
        assert!(RiskParameters::new(0, 0, 0).check_ranges().is_ok());
        assert_eq!(RiskParameters::new(4, 0, 0).check_ranges().unwrap_err().parameter, "severity");
        assert_eq!(RiskParameters::new(0, 0, 4).check_ranges().unwrap_err().parameter, "controllability");
    }

    #[test]
    fn asil_total_order() {
        let mut v = AsilLevel::ALL.to_vec();
        v.reverse();
        v.sort();
        assert_eq!(v, AsilLevel::ALL.to_vec());
        assert!(AsilLevel::QM < AsilLevel::A && AsilLevel::C < AsilLevel::D);
    }

    #[test]
    fn rsil_bounds() {
        assert!(Rsil::new(5).is_err());
        assert!(!Rsil::ZERO.requires_measures());
        assert!(Rsil::new(1).unwrap().requires_measures());
        assert!(serde_json::from_str::<Rsil>("7").is_err());
    }
}
