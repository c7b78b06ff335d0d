//! Record identifiers and actor identities.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Highest serial that still fits the four-digit rendering.
pub const MAX_SERIAL: u32 = 9999;

/// Kind tag carried as the prefix of every [`RecordId`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RecordKind {
    Hazard,
    OperationalScenario,
    Malfunction,
    HazardousScenario,
    SafetyGoal,
    FunctionalRequirement,
    TechnicalRequirement,
    Component,
    ComponentRelease,
    SystemDocument,
    Review,
    Decision,
    Prototype,
}

impl RecordKind {
    pub const ALL: [RecordKind; 13] = [
        RecordKind::Hazard,
        RecordKind::OperationalScenario,
        RecordKind::Malfunction,
        RecordKind::HazardousScenario,
        RecordKind::SafetyGoal,
        RecordKind::FunctionalRequirement,
        RecordKind::TechnicalRequirement,
        RecordKind::Component,
        RecordKind::ComponentRelease,
        RecordKind::SystemDocument,
        RecordKind::Review,
        RecordKind::Decision,
        RecordKind::Prototype,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            RecordKind::Hazard => "HZ",
            RecordKind::OperationalScenario => "OS",
            RecordKind::Malfunction => "MF",
            RecordKind::HazardousScenario => "HS",
            RecordKind::SafetyGoal => "SG",
            RecordKind::FunctionalRequirement => "FSR",
            RecordKind::TechnicalRequirement => "TSR",
            RecordKind::Component => "CMP",
            RecordKind::ComponentRelease => "CRD",
            RecordKind::SystemDocument => "SWD",
            RecordKind::Review => "RVW",
            RecordKind::Decision => "DEC",
            RecordKind::Prototype => "PRO",
        }
    }

    pub fn from_prefix(tag: &str) -> Option<RecordKind> {
        RecordKind::ALL.into_iter().find(|k| k.prefix() == tag)
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.prefix())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordIdError {
    #[error("record id `{0}` is not of the form <TAG>-<NNNN>")]
    Malformed(String),
    #[error("unknown record kind tag `{tag}` in `{id}`")]
    UnknownTag { tag: String, id: String },
    #[error("serial of `{0}` must be between 0001 and 9999")]
    SerialOutOfRange(String),
    #[error("expected a {expected} id, found `{found}`")]
    WrongKind { expected: RecordKind, found: RecordId },
}

/// Identifier such as `HZ-0007`: a kind tag and a serial in `1..=9999`.
///
/// Ordering follows the rendered string, which coincides with numeric
/// ordering of serials inside a kind because of the zero padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RecordId {
    kind: RecordKind,
    serial: u32,
}

impl RecordId {
    pub fn new(kind: RecordKind, serial: u32) -> Result<Self, RecordIdError> {
        if serial == 0 || serial > MAX_SERIAL {
            return Err(RecordIdError::SerialOutOfRange(format!("{}-{serial}", kind.prefix())));
        }
        Ok(RecordId { kind, serial })
    }

    pub fn kind(&self) -> RecordKind {
        self.kind
    }

    pub fn serial(&self) -> u32 {
        self.serial
    }

    /// Returns `self` if it carries `kind`, a [`RecordIdError::WrongKind`] otherwise.
    pub fn expect_kind(self, kind: RecordKind) -> Result<Self, RecordIdError> {
        if self.kind == kind {
            Ok(self)
        } else {
            Err(RecordIdError::WrongKind { expected: kind, found: self })
        }
    }
}

/// Shorthand used by fixtures and tests; panics on an invalid literal.
pub fn rid(text: &str) -> RecordId {
    text.parse().unwrap_or_else(|e| panic!("invalid record id literal: {e}"))
}

impl fmt::Display for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{:04}", self.kind.prefix(), self.serial)
    }
}

impl FromStr for RecordId {
    type Err = RecordIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (tag, digits) = s.split_once('-').ok_or_else(|| RecordIdError::Malformed(s.to_string()))?;
        if digits.len() != 4 || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(RecordIdError::Malformed(s.to_string()));
        }
        let kind = RecordKind::from_prefix(tag)
            .ok_or_else(|| RecordIdError::UnknownTag { tag: tag.to_string(), id: s.to_string() })?;
        let serial: u32 = digits.parse().map_err(|_| RecordIdError::Malformed(s.to_string()))?;
        RecordId::new(kind, serial)
    }
}

impl Ord for RecordId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.kind.prefix().cmp(other.kind.prefix()).then(self.serial.cmp(&other.serial))
    }
}

impl PartialOrd for RecordId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for RecordId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RecordId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Identity of a human actor (an entry under `actors/`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActorId(pub String);

impl ActorId {
    pub fn new(id: impl Into<String>) -> Self {
        ActorId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ActorId {
    fn from(s: &str) -> Self {
        ActorId(s.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn renders_zero_padded() {
        let id = RecordId::new(RecordKind::Hazard, 7).unwrap();
        assert_eq!(id.to_string(), "HZ-0007");
    }

    #[test]
    fn rejects_unknown_tag_by_name() {
        let err = "XYZ-0001".parse::<RecordId>().unwrap_err();
        assert_eq!(err, RecordIdError::UnknownTag { tag: "XYZ".into(), id: "XYZ-0001".into() });
        assert!(err.to_string().contains("XYZ"));
    }

    #[test]
    fn rejects_bad_shapes() {
        for bad in ["HZ-7", "HZ-00007", "HZ0007", "HZ-000a", "HZ-0000", "-0001", "HZ--001"] {
            assert!(bad.parse::<RecordId>().is_err(), "{bad} should be rejected");
        }
    }

    #[test]
    fn ordering_matches_rendered_strings() {
        let mut ids: Vec<RecordId> =
            ["TSR-0010", "CRD-0002", "CMP-0003", "TSR-0002", "SG-0001"].iter().map(|s| rid(s)).collect();
        ids.sort();
        let mut rendered: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
        let sorted = {
            let mut r = rendered.clone();
            r.sort();
            r
        };
        assert_eq!(rendered, sorted);
        rendered.dedup();
        assert_eq!(rendered.len(), 5);
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(kind_ix in 0usize..13, serial in 1u32..=9999) {
            let id = RecordId::new(RecordKind::ALL[kind_ix], serial).unwrap();
            let text = id.to_string();
            prop_assert_eq!(text.len(), id.kind().prefix().len() + 5);
            prop_assert_eq!(text.parse::<RecordId>().unwrap(), id);
        }

        #[test]
        fn string_order_equals_id_order(a in 0usize..13, sa in 1u32..=9999, b in 0usize..13, sb in 1u32..=9999) {
            let x = RecordId::new(RecordKind::ALL[a], sa).unwrap();
            let y = RecordId::new(RecordKind::ALL[b], sb).unwrap();
            prop_assert_eq!(x.cmp(&y), x.to_string().cmp(&y.to_string()));
        }
    }
}
