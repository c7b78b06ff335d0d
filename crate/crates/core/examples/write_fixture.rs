//! Writes the reference fixture as an on-disk repository, optionally with
//! the journal cut after the first `events` entries.
//!
//!     cargo run --example write_fixture -- crates/core/fixtures/unicaragil
//!     cargo run --example write_fixture -- crates/core/fixtures/unicaragil-stage5-pending 24

use std::path::PathBuf;

use release_gate::{actions, fixture, store, workflow};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let target: PathBuf = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/unicaragil"));
    let events: Option<usize> = args.next().map(|n| n.parse()).transpose()?;

    let mut repo = fixture::unicaragil();
    if let Some(n) = events {
        repo.journal.truncate(n);
        let state = workflow::replay(&repo.journal, &repo)?;
        actions::sync_projections(&mut repo, &state);
    }
    repo.root = target.clone();
    if target.join(store::JOURNAL_FILE).exists() {
        // the journal is append-only; start over from a clean directory
        std::fs::remove_file(target.join(store::JOURNAL_FILE))?;
    }
    store::save(&repo)?;
    println!("wrote {} records and {} events to {}", repo.record_count(), repo.journal.len(), target.display());
    Ok(())
}
