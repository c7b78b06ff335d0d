mod common;

use proptest::prelude::*;
use release_gate::fixture::{self, FAMILY};
use release_gate::model::*;
use release_gate::workflow::{
    apply_event, grant_stage, replay, EventKind, WorkflowError, WorkflowEvent, WorkflowState,
};
use release_gate::Repository;

/// Fixture state with every review and compiled document in place but no
/// stage granted yet.
fn ungranted_state(repo: &Repository) -> WorkflowState {
    let journal: Vec<WorkflowEvent> = repo
        .journal
        .iter()
        .filter(|e| e.kind != EventKind::ReleaseDecided)
        .enumerate()
        .map(|(i, e)| WorkflowEvent { seq: i as u64 + 1, ..e.clone() })
        .collect();
    replay(&journal, repo).unwrap()
}

fn decision(stage_no: u8) -> ReleaseDecision {
    ReleaseDecision {
        id: rid("DEC-0099"),
        prototype: rid(FAMILY),
        stage: stage(stage_no),
        verdict: DecisionVerdict::Granted,
        conditions: String::new(),
        decided_by: ActorId::new("rc-chair"),
    }
}

#[test]
fn incremental_application_equals_replay_at_every_prefix() {
    let repo = fixture::unicaragil();
    let mut state = WorkflowState::default();
    for (n, event) in repo.journal.iter().enumerate() {
        state = apply_event(&state, event, &repo).unwrap();
        assert_eq!(state, replay(&repo.journal[..=n], &repo).unwrap(), "after #{}", event.seq);
    }
}

#[test]
fn every_fixture_event_rejects_every_other_role() {
    let repo = fixture::unicaragil();
    let mut state = WorkflowState::default();
    for event in &repo.journal {
        for actor in repo.actors.values().filter(|a| a.role != event.kind.required_role()) {
            let forged = WorkflowEvent { actor: actor.id.clone(), ..event.clone() };
            let err = apply_event(&state, &forged, &repo).unwrap_err();
            assert!(matches!(err, WorkflowError::RoleGate { .. }), "#{} as {}: {err}", event.seq, actor.id);
        }
        state = apply_event(&state, event, &repo).unwrap();
    }
}

#[test]
fn component_release_only_by_its_developer() {
    let repo = fixture::unicaragil();
    let state = replay(&repo.journal[..20], &repo).unwrap();
    let submit = &repo.journal[20];
    assert_eq!(submit.kind, EventKind::ImplementationSubmitted);
    let forged = WorkflowEvent { actor: ActorId::new("fd-motion"), ..submit.clone() };
    assert!(matches!(apply_event(&state, &forged, &repo), Err(WorkflowError::NotComponentDeveloper { .. })));
}

#[test]
fn stage_one_needs_no_predecessor_and_skips_are_refused() {
    let repo = fixture::unicaragil();
    let state = ungranted_state(&repo);
    for s in 2..=5 {
        let err = grant_stage(&state, &decision(s), &repo).unwrap_err();
        assert!(matches!(err, WorkflowError::GradualGating { missing, .. } if missing == stage(s - 1)), "{err}");
    }
    let state = grant_stage(&state, &decision(1), &repo).unwrap();
    assert!(matches!(grant_stage(&state, &decision(3), &repo), Err(WorkflowError::GradualGating { .. })));
    assert!(matches!(grant_stage(&state, &decision(1), &repo), Err(WorkflowError::AlreadyGranted { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Whatever order decisions arrive in, granted stages always form a
    /// prefix 1..=k of the ladder and a stage is only granted on top of its
    /// predecessor.
    #[test]
    fn granted_stages_are_always_a_prefix(requests in proptest::collection::vec(1u8..=5, 1..30)) {
        let repo = fixture::unicaragil();
        let family = rid(FAMILY);
        let mut state = ungranted_state(&repo);
        for s in requests {
            let before = state.granted(&family);
            let expected_ok = !before.contains(&stage(s)) && (s == 1 || before.contains(&stage(s - 1)));
            match grant_stage(&state, &decision(s), &repo) {
                Ok(next) => {
                    prop_assert!(expected_ok);
                    state = next;
                }
                Err(_) => prop_assert!(!expected_ok),
            }
            let granted = state.granted(&family);
            let k = granted.len() as u8;
            prop_assert_eq!(granted, (1..=k).map(stage).collect());
        }
    }

    /// A random actor emitting a random fixture event is accepted only with
    /// the required role, and a rejected event never changes the state.
    #[test]
    fn role_gate_holds_for_random_actors(position in 0usize..25, actor_idx in 0usize..7) {
        let repo = fixture::unicaragil();
        let state = replay(&repo.journal[..position], &repo).unwrap();
        let actor = repo.actors.values().nth(actor_idx).unwrap();
        let event = WorkflowEvent { actor: actor.id.clone(), ..repo.journal[position].clone() };
        let result = apply_event(&state, &event, &repo);
        if actor.role != event.kind.required_role() {
            let rejected_by_role = matches!(result, Err(WorkflowError::RoleGate { .. }));
            prop_assert!(rejected_by_role);
        } else if actor.id == repo.journal[position].actor {
            prop_assert!(result.is_ok());
        }
    }
}
