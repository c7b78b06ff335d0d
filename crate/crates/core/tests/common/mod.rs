#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use release_gate::fixture;
use release_gate::store;
use release_gate::workflow::replay;
use release_gate::Repository;
use tempfile::TempDir;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/unicaragil")
}

/// Fresh on-disk copy of the checked-in fixture.
pub fn copy_fixture() -> TempDir {
    copy_dir(&fixture_dir())
}

pub fn copy_dir(src: &Path) -> TempDir {
    let tmp = TempDir::new().unwrap();
    for entry in walkdir::WalkDir::new(src) {
        let entry = entry.unwrap();
        let rel = entry.path().strip_prefix(src).unwrap();
        let dst = tmp.path().join(rel);
        if entry.file_type().is_dir() {
            fs::create_dir_all(&dst).unwrap();
        } else {
            fs::copy(entry.path(), &dst).unwrap();
        }
    }
    tmp
}

/// The fixture with the journal cut after `events` entries, saved to a temp dir.
pub fn fixture_upto(events: usize) -> TempDir {
    let tmp = TempDir::new().unwrap();
    let mut repo = fixture::unicaragil();
    repo.journal.truncate(events);
    let state = replay(&repo.journal, &repo).unwrap();
    release_gate::actions::sync_projections(&mut repo, &state);
    repo.root = tmp.path().to_path_buf();
    store::save(&repo).unwrap();
    tmp
}

/// Relative path -> bytes of every file below `root`.
pub fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    walkdir::WalkDir::new(root)
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
            (rel, fs::read(e.path()).unwrap())
        })
        .collect()
}

pub fn load(root: &Path) -> Repository {
    store::load(root).unwrap()
}

pub fn journal_len(root: &Path) -> usize {
    fs::read_to_string(root.join(store::JOURNAL_FILE)).unwrap().lines().count()
}
