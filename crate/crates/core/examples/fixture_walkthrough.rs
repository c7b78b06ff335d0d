//! Replays the reference journal event by event and shows how the family
//! vehicle climbs the stage ladder.

use release_gate::fixture::{self, FAMILY};
use release_gate::model::rid;
use release_gate::workflow::{apply_event, permissible_conditions, WorkflowState};

fn main() {
    let repo = fixture::unicaragil();
    let family = rid(FAMILY);
    let mut state = WorkflowState::default();
    for event in &repo.journal {
        state = apply_event(&state, event, &repo).expect("reference journal replays");
        let granted: Vec<String> = state.granted(&family).iter().map(|s| s.to_string()).collect();
        println!(
            "#{:<2} {:<14} {:<32} granted [{}]",
            event.seq,
            event.actor,
            format!("{:?}", event.kind),
            granted.join(",")
        );
    }
    if let Some(def) = permissible_conditions(&state, &family, &repo.config.stages) {
        println!("\npermitted: stage {} ({}) - {}", def.number, def.operating_mode, def.description);
        println!("conditions: {}", def.operating_conditions);
    }
}
