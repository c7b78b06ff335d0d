use serde::{Deserialize, Serialize};

use crate::model::{ActorId, RecordId, Role, StageNumber};

/// Tasks of the release workflow that leave a trace in the journal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    InitialAnalysesCompleted,
    PreliminarySafetyConceptIssued,
    ImplementationSubmitted,
    DocumentationExamined,
    MismatchFound,
    ComponentReleaseIssued,
    SafetyDocumentationUpdated,
    TestAccompanied,
    ReviewCompleted,
    ReleaseDocumentCompiled,
    ReleaseDecided,
    OperationRecorded,
}

impl EventKind {
    pub const ALL: [EventKind; 12] = [
        EventKind::InitialAnalysesCompleted,
        EventKind::PreliminarySafetyConceptIssued,
        EventKind::ImplementationSubmitted,
        EventKind::DocumentationExamined,
        EventKind::MismatchFound,
        EventKind::ComponentReleaseIssued,
        EventKind::SafetyDocumentationUpdated,
        EventKind::TestAccompanied,
        EventKind::ReviewCompleted,
        EventKind::ReleaseDocumentCompiled,
        EventKind::ReleaseDecided,
        EventKind::OperationRecorded,
    ];

    /// The only role allowed to emit this event.
    pub fn required_role(self) -> Role {
        use EventKind::*;
        match self {
            InitialAnalysesCompleted
            | PreliminarySafetyConceptIssued
            | DocumentationExamined
            | MismatchFound
            | SafetyDocumentationUpdated
            | ReleaseDocumentCompiled => Role::SafetyEngineer,
            ImplementationSubmitted | ComponentReleaseIssued | OperationRecorded => Role::FunctionDeveloper,
            TestAccompanied | ReviewCompleted => Role::CertificationAgency,
            ReleaseDecided => Role::ReleaseCommittee,
        }
    }
}

/// Record references and parameters carried by an event.
///
/// Which fields are required depends on the event kind; absent fields are
/// omitted from the journal line.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventPayload {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prototype: Option<RecordId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<StageNumber>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<RecordId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl EventPayload {
    pub fn for_record(record: RecordId) -> Self {
        EventPayload { record: Some(record), ..Default::default() }
    }

    pub fn for_stage(prototype: RecordId, stage: StageNumber) -> Self {
        EventPayload { prototype: Some(prototype), stage: Some(stage), ..Default::default() }
    }

    pub fn for_prototype(prototype: RecordId) -> Self {
        EventPayload { prototype: Some(prototype), ..Default::default() }
    }
}

/// One line of `journal.ndjson`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkflowEvent {
    pub seq: u64,
    pub actor: ActorId,
    pub kind: EventKind,
    pub payload: EventPayload,
    pub timestamp: String,
}

impl WorkflowEvent {
    pub fn new(
        seq: u64,
        actor: impl Into<ActorId>,
        kind: EventKind,
        payload: EventPayload,
        timestamp: impl Into<String>,
    ) -> Self {
        WorkflowEvent { seq, actor: actor.into(), kind, payload, timestamp: timestamp.into() }
    }

    /// Canonical single-line JSON form (no trailing newline).
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("events always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rid, stage};

    #[test]
    fn each_kind_has_exactly_one_role() {
        for kind in EventKind::ALL {
            let allowed: Vec<Role> = Role::ALL.into_iter().filter(|r| *r == kind.required_role()).collect();
            assert_eq!(allowed.len(), 1);
        }
    }

    #[test]
    fn canonical_line_layout() {
        let ev = WorkflowEvent::new(
            3,
            "rc-chair",
            EventKind::ReleaseDecided,
            EventPayload {
                prototype: Some(rid("PRO-0003")),
                stage: Some(stage(2)),
                record: Some(rid("DEC-0002")),
                ..Default::default()
            },
            "2024-05-01T10:00:00Z",
        );
        assert_eq!(
            ev.to_line(),
            r#"{"seq":3,"actor":"rc-chair","kind":"ReleaseDecided","payload":{"prototype":"PRO-0003","stage":2,"record":"DEC-0002"},"timestamp":"2024-05-01T10:00:00Z"}"#
        );
        let back: WorkflowEvent = serde_json::from_str(&ev.to_line()).unwrap();
        assert_eq!(back, ev);
    }
}
