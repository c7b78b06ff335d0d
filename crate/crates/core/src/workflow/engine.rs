use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::event::{EventKind, WorkflowEvent};
use super::state::{DecisionEntry, ReviewEntry, WorkflowState};
use crate::model::{
    ActorId, DecisionVerdict, Recommendation, RecordId, RecordKind, ReleaseDecision, ReleaseStatus, Role, StageNumber,
};
use crate::repository::Repository;
use crate::validation::{readiness_report, ConfigError, ReadinessReport};

/// Why a stage could not be granted although the sequence allowed it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum BlockReason {
    NoCompiledDocument,
    NoReview,
    ReviewAgainst { review: RecordId },
    Readiness(ReadinessReport),
    Configuration(String),
}

impl fmt::Display for BlockReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockReason::NoCompiledDocument => f.write_str("no compiled release document"),
            BlockReason::NoReview => f.write_str("no review recommendation recorded"),
            BlockReason::ReviewAgainst { review } => write!(f, "review {review} recommends against release"),
            BlockReason::Readiness(r) => write!(f, "{} outstanding readiness issue(s)", r.issues.len()),
            BlockReason::Configuration(m) => f.write_str(m),
        }
    }
}

fn join_reasons(reasons: &[BlockReason]) -> String {
    reasons.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkflowError {
    #[error("event seq {found} does not follow {expected_after}")]
    Sequence { expected_after: u64, found: u64 },
    #[error("actor {0} is not registered")]
    UnknownActor(ActorId),
    #[error("{kind:?} requires {required}; actor {actor} is {actual}")]
    RoleGate { kind: EventKind, required: Role, actor: ActorId, actual: Role },
    #[error("only {developer}, the developer of {component}, may act on it; {actor} may not")]
    NotComponentDeveloper { component: RecordId, developer: ActorId, actor: ActorId },
    #[error("{kind:?} needs payload field `{field}`")]
    MissingPayload { kind: EventKind, field: &'static str },
    #[error("{kind:?} references {record}, which is missing or of the wrong kind")]
    UnknownRecord { kind: EventKind, record: RecordId },
    #[error("{record} names {named} but the event was emitted by {actor}")]
    ActorMismatch { record: RecordId, named: ActorId, actor: ActorId },
    #[error("{record} is {status:?}: {reason}")]
    OutOfSequence { record: RecordId, status: ReleaseStatus, reason: &'static str },
    #[error("{kind:?} for {prototype} requires {prerequisite} first")]
    MissingPrerequisite { kind: EventKind, prototype: RecordId, prerequisite: &'static str },
    #[error("gradual gating: stage {requested} of {prototype} requires stage {missing} to be granted first")]
    GradualGating { prototype: RecordId, requested: StageNumber, missing: StageNumber },
    #[error("stage {stage} of {prototype} is already granted")]
    AlreadyGranted { prototype: RecordId, stage: StageNumber },
    #[error("release of stage {stage} for {prototype} blocked: {}", join_reasons(reasons))]
    Blocked { prototype: RecordId, stage: StageNumber, reasons: Vec<BlockReason> },
    #[error("operation at stage {stage} of {prototype} exceeds the granted stage ({})", granted.map(|s| s.to_string()).unwrap_or_else(|| "none".into()))]
    OutsidePermissibleConditions { prototype: RecordId, stage: StageNumber, granted: Option<StageNumber> },
    #[error("{crd} cannot be submitted with empty {field}")]
    IncompleteSubmission { crd: RecordId, field: &'static str },
    #[error("{crd} cannot be released: no passing test for {}", requirements.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", "))]
    UnverifiedRequirements { crd: RecordId, requirements: Vec<RecordId> },
    #[error("decision {0} is not a grant")]
    NotAGrant(RecordId),
}

impl WorkflowError {
    /// The readiness report carried by a blocked decision, if any.
    pub fn readiness(&self) -> Option<&ReadinessReport> {
        match self {
            WorkflowError::Blocked { reasons, .. } => reasons.iter().find_map(|r| match r {
                BlockReason::Readiness(report) => Some(report),
                _ => None,
            }),
            _ => None,
        }
    }
}

/// How much evidence is re-checked while applying events.
///
/// `Live` is used when an event is first recorded: besides role and
/// sequencing gates it checks the repository evidence (submission fields,
/// passing tests, stage readiness). `Replay` re-folds a journal whose
/// evidence gates were already passed when each event was written, so it
/// only re-checks what cannot change afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateMode {
    Live,
    Replay,
}

/// Applies one new event with full gating.
pub fn apply_event(
    state: &WorkflowState,
    event: &WorkflowEvent,
    repo: &Repository,
) -> Result<WorkflowState, WorkflowError> {
    apply_event_in(GateMode::Live, state, event, repo)
}

pub fn apply_event_in(
    mode: GateMode,
    state: &WorkflowState,
    event: &WorkflowEvent,
    repo: &Repository,
) -> Result<WorkflowState, WorkflowError> {
    if event.seq != state.last_seq + 1 {
        return Err(WorkflowError::Sequence { expected_after: state.last_seq, found: event.seq });
    }
    let actor = repo.actor(&event.actor).ok_or_else(|| WorkflowError::UnknownActor(event.actor.clone()))?;
    let required = event.kind.required_role();
    if actor.role != required {
        return Err(WorkflowError::RoleGate {
            kind: event.kind,
            required,
            actor: event.actor.clone(),
            actual: actor.role,
        });
    }

    let mut next = state.clone();
    next.last_seq = event.seq;
    let kind = event.kind;
    let p = &event.payload;
    if mode == GateMode::Replay {
        if let Some(record) = p.record.filter(|r| !repo.contains(r)) {
            next.dangling.insert(event.seq, record);
            return Ok(next);
        }
    }
    let need_prototype = || p.prototype.ok_or(WorkflowError::MissingPayload { kind, field: "prototype" });
    let need_stage = || p.stage.ok_or(WorkflowError::MissingPayload { kind, field: "stage" });
    let need_record = |expected: RecordKind| -> Result<RecordId, WorkflowError> {
        let record = p.record.ok_or(WorkflowError::MissingPayload { kind, field: "record" })?;
        if record.kind() != expected || !repo.contains(&record) {
            return Err(WorkflowError::UnknownRecord { kind, record });
        }
        Ok(record)
    };
    let need_prototype_record = |id: RecordId| -> Result<RecordId, WorkflowError> {
        if repo.prototypes.contains_key(&id) {
            Ok(id)
        } else {
            Err(WorkflowError::UnknownRecord { kind, record: id })
        }
    };

    match kind {
        EventKind::InitialAnalysesCompleted => {
            let proto = need_prototype_record(need_prototype()?)?;
            next.progress_mut(proto).initial_analyses = true;
        }
        EventKind::PreliminarySafetyConceptIssued => {
            let proto = need_prototype_record(need_prototype()?)?;
            let progress = next.progress_mut(proto);
            if !progress.initial_analyses {
                return Err(WorkflowError::MissingPrerequisite {
                    kind,
                    prototype: proto,
                    prerequisite: "InitialAnalysesCompleted",
                });
            }
            progress.preliminary_concept = true;
        }
        EventKind::ImplementationSubmitted => {
            let crd_id = need_record(RecordKind::ComponentRelease)?;
            require_developer(repo, &crd_id, &event.actor)?;
            if mode == GateMode::Live {
                let crd = &repo.component_releases[&crd_id];
                for (field, value) in
                    [("known_limitations", &crd.known_limitations), ("fallback_mechanisms", &crd.fallback_mechanisms)]
                {
                    if value.trim().is_empty() {
                        return Err(WorkflowError::IncompleteSubmission { crd: crd_id, field });
                    }
                }
            }
            next.releases.insert(crd_id, ReleaseStatus::Submitted);
            next.pending_mismatches.remove(&crd_id);
        }
        EventKind::DocumentationExamined => {
            let crd_id = need_record(RecordKind::ComponentRelease)?;
            let status = state.release_status(&crd_id);
            if status != ReleaseStatus::Submitted {
                return Err(WorkflowError::OutOfSequence {
                    record: crd_id,
                    status,
                    reason: "only submitted documentation can be examined",
                });
            }
        }
        EventKind::MismatchFound => {
            let crd_id = need_record(RecordKind::ComponentRelease)?;
            let status = state.release_status(&crd_id);
            if !matches!(status, ReleaseStatus::Submitted | ReleaseStatus::Released) {
                return Err(WorkflowError::OutOfSequence {
                    record: crd_id,
                    status,
                    reason: "a mismatch can only be raised on submitted or released documentation",
                });
            }
            next.releases.insert(crd_id, ReleaseStatus::MismatchFlagged);
            next.pending_mismatches.insert(crd_id);
        }
        EventKind::ComponentReleaseIssued => {
            let crd_id = need_record(RecordKind::ComponentRelease)?;
            require_developer(repo, &crd_id, &event.actor)?;
            let status = state.release_status(&crd_id);
            match status {
                ReleaseStatus::Submitted => {}
                ReleaseStatus::MismatchFlagged => {
                    return Err(WorkflowError::OutOfSequence {
                        record: crd_id,
                        status,
                        reason: "mismatch pending; resubmit the implementation before releasing",
                    })
                }
                ReleaseStatus::Draft => {
                    return Err(WorkflowError::OutOfSequence {
                        record: crd_id,
                        status,
                        reason: "submit the implementation before releasing",
                    })
                }
                ReleaseStatus::Released => {
                    return Err(WorkflowError::OutOfSequence { record: crd_id, status, reason: "already released" })
                }
            }
            if mode == GateMode::Live {
                let crd = &repo.component_releases[&crd_id];
                let missing: Vec<RecordId> =
                    crd.covered_requirements.iter().filter(|r| !crd.has_pass_for(r)).copied().collect();
                if !missing.is_empty() {
                    return Err(WorkflowError::UnverifiedRequirements { crd: crd_id, requirements: missing });
                }
            }
            next.releases.insert(crd_id, ReleaseStatus::Released);
        }
        EventKind::SafetyDocumentationUpdated => {
            let doc = need_record(RecordKind::SystemDocument)?;
            *next.documentation_updates.entry(doc).or_default() += 1;
        }
        EventKind::TestAccompanied => {
            let proto = need_prototype_record(need_prototype()?)?;
            next.progress_mut(proto).accompanied_tests += 1;
        }
        EventKind::ReviewCompleted => {
            let id = need_record(RecordKind::Review)?;
            let review = &repo.reviews[&id];
            if review.reviewer != event.actor {
                return Err(WorkflowError::ActorMismatch {
                    record: id,
                    named: review.reviewer.clone(),
                    actor: event.actor.clone(),
                });
            }
            next.progress_mut(review.prototype)
                .reviews
                .insert(review.stage, ReviewEntry { review: id, recommendation: review.recommendation });
        }
        EventKind::ReleaseDocumentCompiled => {
            let proto = need_prototype_record(need_prototype()?)?;
            let stage = need_stage()?;
            next.progress_mut(proto).compiled.insert(stage, p.digest.clone());
        }
        EventKind::ReleaseDecided => {
            let id = need_record(RecordKind::Decision)?;
            let decision = &repo.decisions[&id];
            if decision.decided_by != event.actor {
                return Err(WorkflowError::ActorMismatch {
                    record: id,
                    named: decision.decided_by.clone(),
                    actor: event.actor.clone(),
                });
            }
            if decision.verdict == DecisionVerdict::Granted {
                next = grant_stage_in(mode, &next, decision, repo)?;
            }
            next.progress_mut(decision.prototype)
                .decisions
                .insert(decision.stage, DecisionEntry { decision: id, verdict: decision.verdict });
        }
        EventKind::OperationRecorded => {
            let proto = need_prototype_record(need_prototype()?)?;
            let stage = need_stage()?;
            let granted = state.progress(&proto).and_then(|p| p.highest_granted());
            if granted.is_none_or(|g| stage > g) {
                return Err(WorkflowError::OutsidePermissibleConditions { prototype: proto, stage, granted });
            }
            *next.progress_mut(proto).operations.entry(stage).or_default() += 1;
        }
    }
    Ok(next)
}

fn require_developer(repo: &Repository, crd: &RecordId, actor: &ActorId) -> Result<(), WorkflowError> {
    let component = repo.component_releases[crd].component;
    let developer = repo
        .components
        .get(&component)
        .map(|c| c.developer.clone())
        .ok_or(WorkflowError::UnknownRecord { kind: EventKind::ComponentReleaseIssued, record: component })?;
    if &developer != actor {
        return Err(WorkflowError::NotComponentDeveloper { component, developer, actor: actor.clone() });
    }
    Ok(())
}

/// Grants the decision's stage if the gradual rule and all release gates hold.
pub fn grant_stage(
    state: &WorkflowState,
    decision: &ReleaseDecision,
    repo: &Repository,
) -> Result<WorkflowState, WorkflowError> {
    grant_stage_in(GateMode::Live, state, decision, repo)
}

pub fn grant_stage_in(
    mode: GateMode,
    state: &WorkflowState,
    decision: &ReleaseDecision,
    repo: &Repository,
) -> Result<WorkflowState, WorkflowError> {
    if decision.verdict != DecisionVerdict::Granted {
        return Err(WorkflowError::NotAGrant(decision.id));
    }
    let prototype = decision.prototype;
    let stage = decision.stage;
    if !repo.prototypes.contains_key(&prototype) {
        return Err(WorkflowError::UnknownRecord { kind: EventKind::ReleaseDecided, record: prototype });
    }
    let progress = state.progress(&prototype).cloned().unwrap_or_default();
    if progress.granted.contains(&stage) {
        return Err(WorkflowError::AlreadyGranted { prototype, stage });
    }
    if let Some(previous) = stage.previous() {
        if !progress.granted.contains(&previous) {
            return Err(WorkflowError::GradualGating { prototype, requested: stage, missing: previous });
        }
    }

    let mut reasons = Vec::new();
    match progress.reviews.get(&stage) {
        None => reasons.push(BlockReason::NoReview),
        Some(ReviewEntry { review, recommendation: Recommendation::Against }) => {
            reasons.push(BlockReason::ReviewAgainst { review: *review })
        }
        Some(_) => {}
    }
    if !progress.compiled.contains_key(&stage) {
        reasons.push(BlockReason::NoCompiledDocument);
    }
    if mode == GateMode::Live {
        match readiness_report(repo, state, &prototype, stage) {
            Ok(report) if !report.issues.is_empty() => reasons.push(BlockReason::Readiness(report)),
            Ok(_) => {}
            Err(ConfigError::MissingComposition { .. }) | Err(ConfigError::UnknownPrototype(_)) => {
                reasons.push(BlockReason::Configuration(format!("no stage composition for {prototype} stage {stage}")))
            }
        }
    }
    if !reasons.is_empty() {
        return Err(WorkflowError::Blocked { prototype, stage, reasons });
    }

    let mut next = state.clone();
    next.progress_mut(prototype).granted.insert(stage);
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("replay stopped at journal seq {seq}: {source}")]
pub struct ReplayError {
    pub seq: u64,
    #[source]
    pub source: WorkflowError,
}

/// Folds a journal from the empty state.
pub fn replay(journal: &[WorkflowEvent], repo: &Repository) -> Result<WorkflowState, ReplayError> {
    journal.iter().try_fold(WorkflowState::default(), |state, event| {
        apply_event_in(GateMode::Replay, &state, event, repo).map_err(|source| ReplayError { seq: event.seq, source })
    })
}

/// Flags every released document of `component` as stale.
pub fn mark_stale(repo: &Repository, component: &RecordId) -> Repository {
    let mut next = repo.clone();
    for crd in next.component_releases.values_mut() {
        if &crd.component == component && crd.release_status == ReleaseStatus::Released {
            crd.stale = true;
        }
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::{self, FAMILY, LIFT_RELEASE};
    use crate::model::{rid, stage};

    #[test]
    fn fixture_replays_to_five_stages() {
        let repo = fixture::unicaragil();
        let state = replay(&repo.journal, &repo).unwrap();
        assert_eq!(state.granted(&rid(FAMILY)), (1..=5).map(stage).collect());
        assert!(state.dangling.is_empty());
    }

    #[test]
    fn deleted_record_leaves_dangling_history() {
        let mut repo = fixture::unicaragil();
        repo.component_releases.remove(&rid(LIFT_RELEASE));
        let state = replay(&repo.journal, &repo).unwrap();
        assert_eq!(state.dangling.keys().copied().collect::<Vec<_>>(), vec![21, 22]);
        assert_eq!(state.release_status(&rid(LIFT_RELEASE)), ReleaseStatus::Draft);
    }

    #[test]
    fn live_mode_rejects_unknown_records() {
        let mut repo = fixture::unicaragil();
        repo.journal.truncate(20);
        let state = replay(&repo.journal, &repo).unwrap();
        let mut event = fixture::unicaragil_journal()[20].clone();
        event.payload.record = Some(rid("CRD-0099"));
        let err = apply_event(&state, &event, &repo).unwrap_err();
        assert!(matches!(err, WorkflowError::UnknownRecord { .. }));
    }
}
