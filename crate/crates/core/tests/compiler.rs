mod common;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use release_gate::compiler::{compile, render, write_outputs, CompileError, Format, ReleaseDocument};
use release_gate::fixture::{self, FAMILY, LIFT_RELEASE, SHUTTLE};
use release_gate::model::{rid, stage, StageNumber};
use release_gate::workflow::replay;
use release_gate::{store, Repository};

fn compile_family(repo: &Repository, s: u8) -> ReleaseDocument {
    let state = replay(&repo.journal, repo).unwrap();
    compile(repo, &state, &rid(FAMILY), stage(s)).unwrap()
}

#[test]
fn same_repository_same_bytes() {
    let repo = fixture::unicaragil();
    for s in StageNumber::all() {
        let a = compile_family(&repo, s.get());
        let b = compile_family(&repo, s.get());
        for format in [Format::Text, Format::Json] {
            assert_eq!(render(&a, format), render(&b, format));
        }
        assert_eq!(a.content_digest, a.compute_digest());
    }
}

#[test]
fn disk_and_shuffled_builds_compile_identically() {
    let reference = compile_family(&fixture::unicaragil(), 5);
    let from_disk = compile_family(&store::load(common::fixture_dir()).unwrap(), 5);
    assert_eq!(render(&from_disk, Format::Json), render(&reference, Format::Json));

    let base = fixture::unicaragil();
    for seed in 0..5u64 {
        let mut records = base.records();
        records.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
        let mut repo = Repository::new("elsewhere");
        repo.config = base.config.clone();
        for r in records {
            repo.insert(r).unwrap();
        }
        repo.journal = base.journal.clone();
        assert_eq!(compile_family(&repo, 5).content_digest, reference.content_digest, "seed {seed}");
    }
}

#[test]
fn content_change_changes_digest() {
    let mut repo = fixture::unicaragil();
    let before = compile_family(&repo, 5).content_digest;
    repo.component_releases.get_mut(&rid(LIFT_RELEASE)).unwrap().known_limitations.push_str(" No operation below 0 C.");
    assert_ne!(compile_family(&repo, 5).content_digest, before);
}

#[test]
fn written_files_are_stable() {
    let doc = compile_family(&fixture::unicaragil(), 5);
    let dir = tempfile::TempDir::new().unwrap();
    let paths = write_outputs(&doc, dir.path()).unwrap();
    assert_eq!(paths.len(), 2);
    let first = common::tree(dir.path());
    write_outputs(&doc, dir.path()).unwrap();
    assert_eq!(common::tree(dir.path()), first);
    let json = std::fs::read_to_string(dir.path().join(doc.file_name(Format::Json))).unwrap();
    let back: ReleaseDocument = serde_json::from_str(&json).unwrap();
    assert_eq!(back, doc);
}

#[test]
fn lift_module_only_at_stage_five() {
    let repo = fixture::unicaragil();
    let lift = rid(fixture::LIFT);
    for s in 1..=4 {
        assert!(!compile_family(&repo, s).component_ids().contains(&lift), "stage {s}");
    }
    let doc = compile_family(&repo, 5);
    assert!(doc.component_ids().contains(&lift));
    assert!(render(&doc, Format::Text).contains("boarding assistance (lift)"));
}

#[test]
fn missing_modules_refuse_compilation() {
    let repo = fixture::unicaragil();
    let state = replay(&repo.journal, &repo).unwrap();
    match compile(&repo, &state, &rid(SHUTTLE), stage(1)) {
        Err(CompileError::MissingModules(report)) => assert!(!report.issues.is_empty()),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn non_blocking_defects_are_disclosed() {
    let mut repo = fixture::unicaragil();
    repo.component_releases.get_mut(&rid(LIFT_RELEASE)).unwrap().known_limitations.clear();
    let doc = compile_family(&repo, 5);
    assert_eq!(doc.disclosed_issues.len(), 1);
    assert!(render(&doc, Format::Text).contains("known_limitations is empty"));
}
