//! The examination loop between a function developer and the safety
//! engineer: submit, mismatch, resubmit, release - persisted to a
//! temporary repository.

use release_gate::actions::record_event;
use release_gate::fixture::{self, LIFT_RELEASE};
use release_gate::model::{rid, ActorId};
use release_gate::store;
use release_gate::workflow::{EventKind, EventPayload};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("release-gate-mismatch-{}", std::process::id()));
    let mut repo = fixture::unicaragil_records();
    // start before the lift was ever submitted
    repo.journal = fixture::unicaragil_journal().into_iter().take(20).collect();
    repo.root = dir.clone();
    let state = release_gate::workflow::replay(&repo.journal, &repo)?;
    release_gate::actions::sync_projections(&mut repo, &state);
    store::save(&repo)?;

    let crd = EventPayload::for_record(rid(LIFT_RELEASE));
    let lift_dev = ActorId::new("fd-lift");
    let engineer = ActorId::new("se-lead");
    let steps = [
        (&lift_dev, EventKind::ImplementationSubmitted),
        (&engineer, EventKind::DocumentationExamined),
        (&engineer, EventKind::MismatchFound),
        (&lift_dev, EventKind::ComponentReleaseIssued), // refused: mismatch pending
        (&lift_dev, EventKind::ImplementationSubmitted),
        (&engineer, EventKind::DocumentationExamined),
        (&lift_dev, EventKind::ComponentReleaseIssued),
    ];
    for (i, (actor, kind)) in steps.into_iter().enumerate() {
        let mut payload = crd.clone();
        if kind == EventKind::MismatchFound {
            payload.note = Some("documented platform lock does not match the implemented speed threshold".into());
        }
        let ts = fixture::fixture_timestamp(100 + i as u64);
        match record_event(&repo, actor, kind, payload, &ts) {
            Ok(applied) => {
                store::save(&applied.repo)?;
                println!(
                    "#{} {:?} by {} -> {:?}",
                    applied.event.seq,
                    kind,
                    actor,
                    applied.state.release_status(&rid(LIFT_RELEASE))
                );
                repo = applied.repo;
            }
            Err(err) => println!("refused {kind:?} by {actor}: {err}"),
        }
    }
    let reloaded = store::load(&dir)?;
    println!("journal on disk: {} events", reloaded.journal.len());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
