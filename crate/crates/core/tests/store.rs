mod common;

use std::fs;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use release_gate::fixture;
use release_gate::model::rid;
use release_gate::store::{self, StoreError};
use release_gate::Repository;
use tempfile::TempDir;

use common::{copy_fixture, fixture_dir, tree};

#[test]
fn checked_in_fixture_matches_builder() {
    assert_eq!(store::load(fixture_dir()).unwrap(), fixture::unicaragil());
}

#[test]
fn pending_fixture_is_the_journal_prefix() {
    let pending = store::load(fixture_dir().with_file_name("unicaragil-stage5-pending")).unwrap();
    let full = fixture::unicaragil();
    assert_eq!(pending.journal[..], full.journal[..24]);
    assert_eq!(pending.record_count(), full.record_count());
}

#[test]
fn round_trip_is_lossless_and_byte_identical() {
    let dir = copy_fixture();
    let before = tree(dir.path());
    let repo = store::load(dir.path()).unwrap();
    let mtimes: Vec<_> = walkdir::WalkDir::new(dir.path())
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| e.metadata().unwrap().modified().unwrap())
        .collect();
    store::save(&repo).unwrap();
    assert_eq!(tree(dir.path()), before);
    assert_eq!(store::load(dir.path()).unwrap(), repo);
    // nothing was rewritten
    let after: Vec<_> = walkdir::WalkDir::new(dir.path())
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| e.metadata().unwrap().modified().unwrap())
        .collect();
    assert_eq!(mtimes, after);
}

#[test]
fn editing_one_record_changes_one_file() {
    let dir = copy_fixture();
    let before = tree(dir.path());
    let mut repo = store::load(dir.path()).unwrap();
    repo.hazards.get_mut(&rid("HZ-0002")).unwrap().description.push_str(" at low speed");
    store::save(&repo).unwrap();
    let after = tree(dir.path());
    let changed: Vec<&String> = after.keys().filter(|k| before.get(*k) != after.get(*k)).collect();
    assert_eq!(changed, vec!["hazards/HZ-0002.json"]);
}

#[test]
fn removed_records_lose_their_file() {
    let dir = copy_fixture();
    let mut repo = store::load(dir.path()).unwrap();
    repo.remove(&rid("RVW-0005")).unwrap();
    // a stray file left behind by hand
    let stray = dir.path().join("scenarios/OS-0099.json");
    fs::copy(dir.path().join("scenarios/OS-0003.json"), &stray).unwrap();
    store::save(&repo).unwrap();
    assert!(!stray.exists());
    assert!(!dir.path().join("reviews/RVW-0005.json").exists());
    assert!(dir.path().join("reviews/RVW-0004.json").exists());
}

#[test]
fn journal_is_append_only() {
    let dir = copy_fixture();
    let mut repo = store::load(dir.path()).unwrap();
    let journal = fs::read(dir.path().join(store::JOURNAL_FILE)).unwrap();
    repo.journal[3].timestamp = "2030-01-01T00:00:00Z".into();
    let err = store::save(&repo).unwrap_err();
    assert!(matches!(err, StoreError::JournalRewritten { .. }), "{err}");
    assert_eq!(fs::read(dir.path().join(store::JOURNAL_FILE)).unwrap(), journal);

    let mut repo = store::load(dir.path()).unwrap();
    repo.journal.pop();
    assert!(matches!(store::save(&repo), Err(StoreError::JournalRewritten { .. })));
}

#[test]
fn unknown_variant_names_file_and_field() {
    let dir = copy_fixture();
    let path = dir.path().join("scenarios/OS-0001.json");
    let text = fs::read_to_string(&path).unwrap();
    let kind = release_gate::store::to_canonical_json(&fixture::unicaragil().scenarios[&rid("OS-0001")].kind);
    let bad = text.replacen(kind.trim(), "\"Teleport\"", 1);
    assert_ne!(bad, text);
    fs::write(&path, bad).unwrap();
    let err = store::load(dir.path()).unwrap_err();
    match &err {
        StoreError::Parse { path: p, field, line, .. } => {
            assert!(p.ends_with("scenarios/OS-0001.json"));
            assert_eq!(field, "kind");
            assert!(*line > 0);
        }
        other => panic!("unexpected {other}"),
    }
    assert!(err.to_string().contains("Teleport"), "{err}");
}

#[test]
fn dangling_references_are_all_listed() {
    let dir = copy_fixture();
    let mut repo = store::load(dir.path()).unwrap();
    repo.component_releases.get_mut(&rid("CRD-0001")).unwrap().component = rid("CMP-0099");
    repo.requirements.get_mut(&rid("TSR-0006")).unwrap().allocated_to = vec![rid("CMP-0098")];
    // write the records directly, bypassing the checks save does not make
    for id in ["CRD-0001", "TSR-0006"] {
        let record = repo.get(&rid(id)).unwrap();
        fs::write(dir.path().join(store::record_path(&record)), store::record_json(&record)).unwrap();
    }
    let err = store::load(dir.path()).unwrap_err();
    let StoreError::Integrity(integrity) = &err else { panic!("unexpected {err}") };
    assert_eq!(integrity.offenders.len(), 2);
    let text = err.to_string();
    assert!(text.contains("CMP-0099") && text.contains("CMP-0098"), "{text}");
    assert!(text.contains("CRD-0001") && text.contains("TSR-0006"), "{text}");
}

#[test]
fn newer_schema_is_refused() {
    let dir = copy_fixture();
    let path = dir.path().join(store::CONFIG_FILE);
    let mut config: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    config["schema_version"] = serde_json::json!(release_gate::SCHEMA_VERSION + 1);
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    assert!(matches!(store::load(dir.path()), Err(StoreError::SchemaTooNew { .. })));
}

#[test]
fn creation_order_does_not_matter() {
    let reference = tree(&fixture_dir());
    let base = fixture::unicaragil();
    for seed in 0..5u64 {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut records = base.records();
        records.shuffle(&mut rng);
        let tmp = TempDir::new().unwrap();
        let mut repo = Repository::new(tmp.path());
        repo.config = base.config.clone();
        for record in records {
            repo.insert(record).unwrap();
        }
        repo.journal = base.journal.clone();
        store::save(&repo).unwrap();
        assert_eq!(tree(tmp.path()), reference, "seed {seed}");
    }
}

#[test]
fn second_writer_is_locked_out() {
    let dir = copy_fixture();
    let lock = store::WriteLock::acquire(dir.path()).unwrap();
    assert!(matches!(store::WriteLock::acquire(dir.path()), Err(StoreError::Locked { .. })));
    drop(lock);
    store::WriteLock::acquire(dir.path()).unwrap();
}
