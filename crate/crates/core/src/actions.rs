//! Gated actions shared by the command line and the review service.
//!
//! Each action works on an in-memory repository and either returns the
//! updated repository with exactly one new journal event, or an error and
//! no change at all. Record projections (release status of component
//! release documents, granted stages of prototypes) are refreshed from the
//! workflow state after every event.

use thiserror::Error;

use crate::model::{
    ActorId, DecisionVerdict, Recommendation, RecordId, RecordKind, ReleaseDecision, ReleaseStatus, ReviewRecord,
    StageNumber,
};
use crate::repository::Repository;
use crate::workflow::{
    apply_event, replay, EventKind, EventPayload, ReplayError, WorkflowError, WorkflowEvent, WorkflowState,
};

#[derive(Debug, Error)]
pub enum ActionError {
    /// The stored journal itself does not replay.
    #[error(transparent)]
    Journal(#[from] ReplayError),
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
}

#[derive(Debug, Clone)]
pub struct Applied {
    pub repo: Repository,
    pub state: WorkflowState,
    pub event: WorkflowEvent,
}

/// Current RFC 3339 timestamp, overridable through `RELEASE_GATE_NOW`.
pub fn now() -> String {
    std::env::var("RELEASE_GATE_NOW")
        .unwrap_or_else(|_| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
}

/// Appends one event after passing every live gate.
pub fn record_event(
    repo: &Repository,
    actor: &ActorId,
    kind: EventKind,
    payload: EventPayload,
    timestamp: &str,
) -> Result<Applied, ActionError> {
    let state = replay(&repo.journal, repo)?;
    let event = WorkflowEvent::new(state.last_seq + 1, actor.clone(), kind, payload, timestamp);
    let next_state = apply_event(&state, &event, repo)?;

    let mut next = repo.clone();
    if kind == EventKind::ComponentReleaseIssued {
        if let Some(crd) = event.payload.record.and_then(|id| next.component_releases.get_mut(&id)) {
            crd.released_by = Some(actor.clone());
            crd.stale = false;
        }
    }
    sync_projections(&mut next, &next_state);
    next.journal.push(event.clone());
    Ok(Applied { repo: next, state: next_state, event })
}

/// Copies journal-derived status into the record projections.
pub fn sync_projections(repo: &mut Repository, state: &WorkflowState) {
    for crd in repo.component_releases.values_mut() {
        crd.release_status = state.release_status(&crd.id);
        if crd.release_status != ReleaseStatus::Released {
            crd.released_by = None;
        }
    }
    for (id, proto) in repo.prototypes.iter_mut() {
        proto.granted_stages = state.granted(id);
    }
}

/// Adds a review record by `actor` and the matching `ReviewCompleted` event.
pub fn submit_review(
    repo: &Repository,
    actor: &ActorId,
    prototype: RecordId,
    stage: StageNumber,
    recommendation: Recommendation,
    notes: &str,
    timestamp: &str,
) -> Result<Applied, ActionError> {
    let mut draft = repo.clone();
    let id = draft.next_id(RecordKind::Review);
    draft
        .insert(crate::model::Record::Review(ReviewRecord {
            id,
            prototype,
            stage,
            recommendation,
            notes: notes.to_string(),
            reviewer: actor.clone(),
        }))
        .expect("next_id is unused");
    record_event(&draft, actor, EventKind::ReviewCompleted, EventPayload::for_record(id), timestamp)
}

/// Adds a decision record by `actor` and the matching `ReleaseDecided` event.
pub fn submit_decision(
    repo: &Repository,
    actor: &ActorId,
    prototype: RecordId,
    stage: StageNumber,
    verdict: DecisionVerdict,
    conditions: &str,
    timestamp: &str,
) -> Result<Applied, ActionError> {
    let mut draft = repo.clone();
    let id = draft.next_id(RecordKind::Decision);
    draft
        .insert(crate::model::Record::Decision(ReleaseDecision {
            id,
            prototype,
            stage,
            verdict,
            conditions: conditions.to_string(),
            decided_by: actor.clone(),
        }))
        .expect("next_id is unused");
    record_event(&draft, actor, EventKind::ReleaseDecided, EventPayload::for_record(id), timestamp)
}

/// Records whose projected status disagrees with the journal.
pub fn projection_drift(repo: &Repository, state: &WorkflowState) -> Vec<RecordId> {
    let mut out: Vec<RecordId> = repo
        .component_releases
        .values()
        .filter(|c| c.release_status != state.release_status(&c.id))
        .map(|c| c.id)
        .collect();
    out.extend(repo.prototypes.values().filter(|p| p.granted_stages != state.granted(&p.id)).map(|p| p.id));
    out
}
