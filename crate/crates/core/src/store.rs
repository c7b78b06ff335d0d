//! On-disk repository: one canonical JSON file per record, an NDJSON
//! journal that is only ever appended to, and `repo.json` for the process
//! configuration.
//!
//! ```text
//! <root>/
//!   repo.json  journal.ndjson
//!   actors/  prototypes/  scenarios/  malfunctions/  hazards/
//!   hazardous-scenarios/  safety-goals/  requirements/  components/
//!   component-releases/  system-docs/  reviews/  decisions/
//! ```

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::model::{Record, RecordId, RecordKind};
use crate::repository::{DuplicateRecord, IntegrityError, RepoConfig, Repository, SCHEMA_VERSION};
use crate::workflow::WorkflowEvent;

pub const CONFIG_FILE: &str = "repo.json";
pub const JOURNAL_FILE: &str = "journal.ndjson";
pub const LOCK_FILE: &str = ".release-gate.lock";
pub const ACTORS_DIR: &str = "actors";

/// Record directories in canonical order, actors first.
pub const RECORD_DIRS: [&str; 13] = [
    ACTORS_DIR,
    "prototypes",
    "scenarios",
    "malfunctions",
    "hazards",
    "hazardous-scenarios",
    "safety-goals",
    "requirements",
    "components",
    "component-releases",
    "system-docs",
    "reviews",
    "decisions",
];

pub fn kind_dir(kind: RecordKind) -> &'static str {
    match kind {
        RecordKind::Prototype => "prototypes",
        RecordKind::OperationalScenario => "scenarios",
        RecordKind::Malfunction => "malfunctions",
        RecordKind::Hazard => "hazards",
        RecordKind::HazardousScenario => "hazardous-scenarios",
        RecordKind::SafetyGoal => "safety-goals",
        RecordKind::FunctionalRequirement | RecordKind::TechnicalRequirement => "requirements",
        RecordKind::Component => "components",
        RecordKind::ComponentRelease => "component-releases",
        RecordKind::SystemDocument => "system-docs",
        RecordKind::Review => "reviews",
        RecordKind::Decision => "decisions",
    }
}

/// Path of a record file relative to the repository root.
pub fn record_path(record: &Record) -> PathBuf {
    match record {
        Record::Actor(a) => Path::new(ACTORS_DIR).join(format!("{}.json", a.id)),
        other => {
            let id = other.record_id().expect("non-actor records have ids");
            Path::new(kind_dir(id.kind())).join(format!("{id}.json"))
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}:{column}: field `{field}`: {message}", path.display())]
    Parse { path: PathBuf, line: usize, column: usize, field: String, message: String },
    #[error("{}: file name must be `{expected}`", path.display())]
    FileName { path: PathBuf, expected: String },
    #[error("{}: {id} does not belong in {dir}/", path.display())]
    WrongDirectory { path: PathBuf, id: String, dir: String },
    #[error("{}: schema_version {found} is newer than supported version {supported}", path.display())]
    SchemaTooNew { path: PathBuf, found: u32, supported: u32 },
    #[error("{}: {0}", path.display())]
    Duplicate {
        path: PathBuf,
        #[source]
        source: DuplicateRecord,
    },
    #[error(transparent)]
    Integrity(#[from] IntegrityError),
    #[error("{}: existing journal lines differ from the repository journal; the journal is append-only", path.display())]
    JournalRewritten { path: PathBuf },
    #[error("{}: repository is locked by another writer", path.display())]
    Locked { path: PathBuf },
}

impl StoreError {
    fn io(path: &Path, source: io::Error) -> Self {
        StoreError::Io { path: path.to_path_buf(), source }
    }
}

/// Pretty JSON with two-space indentation and a trailing LF.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("records always serialize");
    text.push('\n');
    text
}

/// Canonical file contents of one record.
pub fn record_json(record: &Record) -> String {
    match record {
        Record::Actor(r) => to_canonical_json(r),
        Record::Prototype(r) => to_canonical_json(r),
        Record::Scenario(r) => to_canonical_json(r),
        Record::Malfunction(r) => to_canonical_json(r),
        Record::Hazard(r) => to_canonical_json(r),
        Record::HazardousScenario(r) => to_canonical_json(r),
        Record::SafetyGoal(r) => to_canonical_json(r),
        Record::Requirement(r) => to_canonical_json(r),
        Record::Component(r) => to_canonical_json(r),
        Record::ComponentRelease(r) => to_canonical_json(r),
        Record::SystemDocument(r) => to_canonical_json(r),
        Record::Review(r) => to_canonical_json(r),
        Record::Decision(r) => to_canonical_json(r),
    }
}

/// Parses `text` as `T`, reporting line, column and field path on failure.
pub fn parse_json<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, StoreError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let field = err.path().to_string();
        let inner = err.into_inner();
        StoreError::Parse {
            path: path.to_path_buf(),
            line: inner.line(),
            column: inner.column(),
            field,
            message: strip_position(&inner.to_string()),
        }
    })
}

// serde_json appends " at line L column C"; the position is reported separately.
fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}

pub fn parse_record(dir: &str, path: &Path, text: &str) -> Result<Record, StoreError> {
    Ok(match dir {
        ACTORS_DIR => Record::Actor(parse_json(path, text)?),
        "prototypes" => Record::Prototype(parse_json(path, text)?),
        "scenarios" => Record::Scenario(parse_json(path, text)?),
        "malfunctions" => Record::Malfunction(parse_json(path, text)?),
        "hazards" => Record::Hazard(parse_json(path, text)?),
        "hazardous-scenarios" => Record::HazardousScenario(parse_json(path, text)?),
        "safety-goals" => Record::SafetyGoal(parse_json(path, text)?),
        "requirements" => Record::Requirement(parse_json(path, text)?),
        "components" => Record::Component(parse_json(path, text)?),
        "component-releases" => Record::ComponentRelease(parse_json(path, text)?),
        "system-docs" => Record::SystemDocument(parse_json(path, text)?),
        "reviews" => Record::Review(parse_json(path, text)?),
        "decisions" => Record::Decision(parse_json(path, text)?),
        other => unreachable!("not a record directory: {other}"),
    })
}

fn read(path: &Path) -> Result<String, StoreError> {
    fs::read_to_string(path).map_err(|e| StoreError::io(path, e))
}

/// `*.json` files of a directory; a missing directory is empty.
fn json_files(dir: &Path) -> Result<Vec<PathBuf>, StoreError> {
    let entries = match fs::read_dir(dir) {
        Ok(entries) => entries,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(StoreError::io(dir, e)),
    };
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| StoreError::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "json") && path.is_file() {
            files.push(path);
        }
    }
    Ok(files)
}

/// Reads `repo.json`, refusing schemas newer than this build.
pub fn load_config(root: &Path) -> Result<RepoConfig, StoreError> {
    let path = root.join(CONFIG_FILE);
    let text = read(&path)?;
    // Check the version before the full schema so newer files get a clear error.
    #[derive(serde::Deserialize)]
    struct Version {
        schema_version: u32,
    }
    let version: Version = parse_json(&path, &text)?;
    if version.schema_version > SCHEMA_VERSION {
        return Err(StoreError::SchemaTooNew { path, found: version.schema_version, supported: SCHEMA_VERSION });
    }
    parse_json(&path, &text)
}

/// Reads the journal in append order.
pub fn load_journal(root: &Path) -> Result<Vec<WorkflowEvent>, StoreError> {
    let path = root.join(JOURNAL_FILE);
    let text = match fs::read_to_string(&path) {
        Ok(text) => text,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(StoreError::io(&path, e)),
    };
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let event: WorkflowEvent = parse_json(&path, line).map_err(|e| match e {
            StoreError::Parse { path, column, field, message, .. } => {
                StoreError::Parse { path, line: i + 1, column, field, message }
            }
            other => other,
        })?;
        events.push(event);
    }
    Ok(events)
}

/// Loads every record, the configuration and the journal, then checks
/// referential integrity (all offenders at once).
pub fn load(root: impl AsRef<Path>) -> Result<Repository, StoreError> {
    let root = root.as_ref();
    let mut repo = Repository::new(root);
    repo.config = load_config(root)?;

    for dir in RECORD_DIRS {
        let mut files = json_files(&root.join(dir))?;
        files.sort();
        for path in files {
            let record = parse_record(dir, &path, &read(&path)?)?;
            check_placement(dir, &path, &record)?;
            repo.insert(record).map_err(|source| StoreError::Duplicate { path: path.clone(), source })?;
        }
    }
    repo.journal = load_journal(root)?;
    repo.check_integrity()?;
    Ok(repo)
}

pub fn check_placement(dir: &str, path: &Path, record: &Record) -> Result<(), StoreError> {
    if let Some(id) = record.record_id() {
        if kind_dir(id.kind()) != dir {
            return Err(StoreError::WrongDirectory { path: path.to_path_buf(), id: id.to_string(), dir: dir.into() });
        }
    }
    let expected = format!("{}.json", record.label());
    if path.file_name().and_then(|n| n.to_str()) != Some(expected.as_str()) {
        return Err(StoreError::FileName { path: path.to_path_buf(), expected });
    }
    Ok(())
}

fn write_if_changed(path: &Path, contents: &str) -> Result<(), StoreError> {
    if fs::read(path).ok().as_deref() == Some(contents.as_bytes()) {
        return Ok(());
    }
    fs::write(path, contents).map_err(|e| StoreError::io(path, e))
}

/// Canonical journal text for `events`.
pub fn journal_text(events: &[WorkflowEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_line());
        out.push('\n');
    }
    out
}

/// Writes `repo` to `repo.root` in canonical form.
///
/// Unchanged files are left untouched, files of records no longer in the
/// repository are removed, and the journal is only appended to: if the
/// existing file is not a prefix of the repository's journal the save is
/// refused before anything is written.
pub fn save(repo: &Repository) -> Result<(), StoreError> {
    let root = repo.root.as_path();
    let journal_path = root.join(JOURNAL_FILE);
    let journal = journal_text(&repo.journal);
    let existing = match fs::read(&journal_path) {
        Ok(bytes) => bytes,
        Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(StoreError::io(&journal_path, e)),
    };
    if !journal.as_bytes().starts_with(&existing) {
        return Err(StoreError::JournalRewritten { path: journal_path });
    }

    fs::create_dir_all(root).map_err(|e| StoreError::io(root, e))?;
    for dir in RECORD_DIRS {
        let path = root.join(dir);
        fs::create_dir_all(&path).map_err(|e| StoreError::io(&path, e))?;
    }
    write_if_changed(&root.join(CONFIG_FILE), &to_canonical_json(&repo.config))?;

    let records = repo.records();
    let wanted: std::collections::BTreeSet<PathBuf> = records.iter().map(|r| root.join(record_path(r))).collect();
    for record in &records {
        write_if_changed(&root.join(record_path(record)), &record_json(record))?;
    }
    for dir in RECORD_DIRS {
        for path in json_files(&root.join(dir))? {
            if !wanted.contains(&path) {
                fs::remove_file(&path).map_err(|e| StoreError::io(&path, e))?;
            }
        }
    }

    let suffix = &journal.as_bytes()[existing.len()..];
    if !suffix.is_empty() || !journal_path.exists() {
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&journal_path)
            .map_err(|e| StoreError::io(&journal_path, e))?;
        file.write_all(suffix).map_err(|e| StoreError::io(&journal_path, e))?;
    }
    Ok(())
}

/// Appends one event to the journal file without touching anything else.
pub fn append_event(root: &Path, event: &WorkflowEvent) -> Result<(), StoreError> {
    let path = root.join(JOURNAL_FILE);
    let mut file =
        fs::OpenOptions::new().create(true).append(true).open(&path).map_err(|e| StoreError::io(&path, e))?;
    let mut line = event.to_line();
    line.push('\n');
    file.write_all(line.as_bytes()).map_err(|e| StoreError::io(&path, e))
}

/// Advisory single-writer lock; released on drop.
#[derive(Debug)]
pub struct WriteLock {
    path: PathBuf,
}

impl WriteLock {
    pub fn acquire(root: &Path) -> Result<WriteLock, StoreError> {
        let path = root.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(WriteLock { path })
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(StoreError::Locked { path }),
            Err(e) => Err(StoreError::io(&path, e)),
        }
    }
}

impl Drop for WriteLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Creates an empty repository with the standard stage ladder.
pub fn init(root: &Path) -> Result<Repository, StoreError> {
    let repo = Repository::new(root);
    save(&repo)?;
    Ok(repo)
}

/// Id of a record file name such as `HZ-0001.json`.
pub fn id_of_file(path: &Path) -> Option<RecordId> {
    path.file_stem()?.to_str()?.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;

    #[test]
    fn every_kind_has_a_listed_directory() {
        for kind in RecordKind::ALL {
            assert!(RECORD_DIRS.contains(&kind_dir(kind)));
        }
    }

    #[test]
    fn canonical_json_ends_with_single_lf() {
        let text = to_canonical_json(&fixture::unicaragil().config);
        assert!(text.ends_with("}\n"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn parse_error_reports_field_path_and_line() {
        let text = "{\n  \"id\": \"HZ-0001\",\n  \"description\": 5\n}\n";
        let err = parse_record("hazards", Path::new("hazards/HZ-0001.json"), text).unwrap_err();
        match err {
            StoreError::Parse { line, field, .. } => {
                assert_eq!(line, 3);
                assert_eq!(field, "description");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn record_paths_follow_kind_directories() {
        let repo = fixture::unicaragil();
        let paths: Vec<PathBuf> = repo.records().iter().map(record_path).collect();
        assert!(paths.contains(&PathBuf::from("requirements/TSR-0004.json")));
        assert!(paths.contains(&PathBuf::from("actors/se-lead.json")));
        assert!(paths.contains(&PathBuf::from("component-releases/CRD-0004.json")));
    }
}
