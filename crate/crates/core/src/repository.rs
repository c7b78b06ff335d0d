//! In-memory repository: indexed records, process configuration and journal.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    Actor, ActorId, Component, ComponentReleaseDocument, Hazard, HazardousScenario, Malfunction, OperationalScenario,
    Prototype, Record, RecordId, RecordKind, ReleaseDecision, ReviewRecord, SafetyGoal, SafetyRequirement,
    StageComposition, StageDefinition, StageNumber, SystemWideDocument,
};
use crate::workflow::WorkflowEvent;

/// Highest on-disk schema this build understands.
pub const SCHEMA_VERSION: u32 = 1;

/// Contents of `repo.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepoConfig {
    pub schema_version: u32,
    pub stages: Vec<StageDefinition>,
    pub compositions: Vec<StageComposition>,
}

impl Default for RepoConfig {
    fn default() -> Self {
        RepoConfig {
            schema_version: SCHEMA_VERSION,
            stages: StageDefinition::standard_ladder(),
            compositions: Vec::new(),
        }
    }
}

impl RepoConfig {
    pub fn stage_definition(&self, stage: StageNumber) -> Option<&StageDefinition> {
        self.stages.iter().find(|d| d.number == stage)
    }

    pub fn composition(&self, prototype: &RecordId, stage: StageNumber) -> Option<&StageComposition> {
        self.compositions.iter().find(|c| &c.prototype == prototype && c.stage == stage)
    }
}

/// A reference that does not resolve, or resolves to the wrong kind.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DanglingReference {
    pub from: String,
    pub field: &'static str,
    pub target: String,
}

impl fmt::Display for DanglingReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{} -> {}", self.from, self.field, self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("duplicate record id {0}")]
pub struct DuplicateRecord(pub String);

/// Every record of a release repository plus its workflow journal.
#[derive(Debug, Clone, Default)]
pub struct Repository {
    pub root: PathBuf,
    pub config: RepoConfig,
    pub actors: BTreeMap<ActorId, Actor>,
    pub prototypes: BTreeMap<RecordId, Prototype>,
    pub scenarios: BTreeMap<RecordId, OperationalScenario>,
    pub malfunctions: BTreeMap<RecordId, Malfunction>,
    pub hazards: BTreeMap<RecordId, Hazard>,
    pub hazardous_scenarios: BTreeMap<RecordId, HazardousScenario>,
    pub safety_goals: BTreeMap<RecordId, SafetyGoal>,
    pub requirements: BTreeMap<RecordId, SafetyRequirement>,
    pub components: BTreeMap<RecordId, Component>,
    pub component_releases: BTreeMap<RecordId, ComponentReleaseDocument>,
    pub system_documents: BTreeMap<RecordId, SystemWideDocument>,
    pub reviews: BTreeMap<RecordId, ReviewRecord>,
    pub decisions: BTreeMap<RecordId, ReleaseDecision>,
    pub journal: Vec<WorkflowEvent>,
}

/// Structural equality: ignores where the repository lives on disk.
impl PartialEq for Repository {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.actors == other.actors
            && self.prototypes == other.prototypes
            && self.scenarios == other.scenarios
            && self.malfunctions == other.malfunctions
            && self.hazards == other.hazards
            && self.hazardous_scenarios == other.hazardous_scenarios
            && self.safety_goals == other.safety_goals
            && self.requirements == other.requirements
            && self.components == other.components
            && self.component_releases == other.component_releases
            && self.system_documents == other.system_documents
            && self.reviews == other.reviews
            && self.decisions == other.decisions
            && self.journal == other.journal
    }
}

impl Repository {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Repository { root: root.into(), ..Default::default() }
    }

    /// Adds a record, refusing ids that are already taken.
    pub fn insert(&mut self, record: Record) -> Result<(), DuplicateRecord> {
        let label = record.label();
        let fresh = match record {
            Record::Actor(r) => self.actors.insert(r.id.clone(), r).is_none(),
            Record::Prototype(r) => self.prototypes.insert(r.id, r).is_none(),
            Record::Scenario(r) => self.scenarios.insert(r.id, r).is_none(),
            Record::Malfunction(r) => self.malfunctions.insert(r.id, r).is_none(),
            Record::Hazard(r) => self.hazards.insert(r.id, r).is_none(),
            Record::HazardousScenario(r) => self.hazardous_scenarios.insert(r.id, r).is_none(),
            Record::SafetyGoal(r) => self.safety_goals.insert(r.id, r).is_none(),
            Record::Requirement(r) => self.requirements.insert(r.id, r).is_none(),
            Record::Component(r) => self.components.insert(r.id, r).is_none(),
            Record::ComponentRelease(r) => self.component_releases.insert(r.id, r).is_none(),
            Record::SystemDocument(r) => self.system_documents.insert(r.id, r).is_none(),
            Record::Review(r) => self.reviews.insert(r.id, r).is_none(),
            Record::Decision(r) => self.decisions.insert(r.id, r).is_none(),
        };
        if fresh {
            Ok(())
        } else {
            Err(DuplicateRecord(label))
        }
    }

    /// Replaces or adds a record.
    pub fn upsert(&mut self, record: Record) {
        let id = record_id_of(&record);
        if let Some(id) = id {
            self.remove(&id);
        } else if let Record::Actor(a) = &record {
            self.actors.remove(&a.id);
        }
        self.insert(record).expect("slot was just cleared");
    }

    pub fn remove(&mut self, id: &RecordId) -> Option<Record> {
        match id.kind() {
            RecordKind::Prototype => self.prototypes.remove(id).map(Record::Prototype),
            RecordKind::OperationalScenario => self.scenarios.remove(id).map(Record::Scenario),
            RecordKind::Malfunction => self.malfunctions.remove(id).map(Record::Malfunction),
            RecordKind::Hazard => self.hazards.remove(id).map(Record::Hazard),
            RecordKind::HazardousScenario => self.hazardous_scenarios.remove(id).map(Record::HazardousScenario),
            RecordKind::SafetyGoal => self.safety_goals.remove(id).map(Record::SafetyGoal),
            RecordKind::FunctionalRequirement | RecordKind::TechnicalRequirement => {
                self.requirements.remove(id).map(Record::Requirement)
            }
            RecordKind::Component => self.components.remove(id).map(Record::Component),
            RecordKind::ComponentRelease => self.component_releases.remove(id).map(Record::ComponentRelease),
            RecordKind::SystemDocument => self.system_documents.remove(id).map(Record::SystemDocument),
            RecordKind::Review => self.reviews.remove(id).map(Record::Review),
            RecordKind::Decision => self.decisions.remove(id).map(Record::Decision),
        }
    }

    pub fn get(&self, id: &RecordId) -> Option<Record> {
        match id.kind() {
            RecordKind::Prototype => self.prototypes.get(id).cloned().map(Record::Prototype),
            RecordKind::OperationalScenario => self.scenarios.get(id).cloned().map(Record::Scenario),
            RecordKind::Malfunction => self.malfunctions.get(id).cloned().map(Record::Malfunction),
            RecordKind::Hazard => self.hazards.get(id).cloned().map(Record::Hazard),
            RecordKind::HazardousScenario => self.hazardous_scenarios.get(id).cloned().map(Record::HazardousScenario),
            RecordKind::SafetyGoal => self.safety_goals.get(id).cloned().map(Record::SafetyGoal),
            RecordKind::FunctionalRequirement | RecordKind::TechnicalRequirement => {
                self.requirements.get(id).cloned().map(Record::Requirement)
            }
            RecordKind::Component => self.components.get(id).cloned().map(Record::Component),
            RecordKind::ComponentRelease => self.component_releases.get(id).cloned().map(Record::ComponentRelease),
            RecordKind::SystemDocument => self.system_documents.get(id).cloned().map(Record::SystemDocument),
            RecordKind::Review => self.reviews.get(id).cloned().map(Record::Review),
            RecordKind::Decision => self.decisions.get(id).cloned().map(Record::Decision),
        }
    }

    pub fn contains(&self, id: &RecordId) -> bool {
        match id.kind() {
            RecordKind::Prototype => self.prototypes.contains_key(id),
            RecordKind::OperationalScenario => self.scenarios.contains_key(id),
            RecordKind::Malfunction => self.malfunctions.contains_key(id),
            RecordKind::Hazard => self.hazards.contains_key(id),
            RecordKind::HazardousScenario => self.hazardous_scenarios.contains_key(id),
            RecordKind::SafetyGoal => self.safety_goals.contains_key(id),
            RecordKind::FunctionalRequirement | RecordKind::TechnicalRequirement => self.requirements.contains_key(id),
            RecordKind::Component => self.components.contains_key(id),
            RecordKind::ComponentRelease => self.component_releases.contains_key(id),
            RecordKind::SystemDocument => self.system_documents.contains_key(id),
            RecordKind::Review => self.reviews.contains_key(id),
            RecordKind::Decision => self.decisions.contains_key(id),
        }
    }

    /// Smallest unused serial above every existing id of `kind`.
    pub fn next_id(&self, kind: RecordKind) -> RecordId {
        let max = self.ids().filter(|id| id.kind() == kind).map(|id| id.serial()).max().unwrap_or(0);
        RecordId::new(kind, max + 1).expect("record serial space exhausted")
    }

    /// Every record id, in sorted order per kind.
    pub fn ids(&self) -> impl Iterator<Item = RecordId> + '_ {
        self.prototypes
            .keys()
            .chain(self.scenarios.keys())
            .chain(self.malfunctions.keys())
            .chain(self.hazards.keys())
            .chain(self.hazardous_scenarios.keys())
            .chain(self.safety_goals.keys())
            .chain(self.requirements.keys())
            .chain(self.components.keys())
            .chain(self.component_releases.keys())
            .chain(self.system_documents.keys())
            .chain(self.reviews.keys())
            .chain(self.decisions.keys())
            .copied()
    }

    /// Every record, actors first, then by kind directory and id.
    pub fn records(&self) -> Vec<Record> {
        let mut out: Vec<Record> = self.actors.values().cloned().map(Record::Actor).collect();
        out.extend(self.ids().filter_map(|id| self.get(&id)));
        out
    }

    /// Count of record files (actors included, configuration and journal excluded).
    pub fn record_count(&self) -> usize {
        self.actors.len() + self.ids().count()
    }

    pub fn actor(&self, id: &ActorId) -> Option<&Actor> {
        self.actors.get(id)
    }

    /// Release documents of `component`, in id order.
    pub fn releases_of<'a>(
        &'a self,
        component: &'a RecordId,
    ) -> impl Iterator<Item = &'a ComponentReleaseDocument> + 'a {
        self.component_releases.values().filter(move |c| &c.component == component)
    }

    /// Hazardous scenarios linked to `hazard`.
    pub fn scenarios_of_hazard<'a>(&'a self, hazard: &'a RecordId) -> impl Iterator<Item = &'a HazardousScenario> + 'a {
        self.hazardous_scenarios.values().filter(move |hs| hs.hazard.as_ref() == Some(hazard))
    }

    /// Test record ids with a passing verdict, across all release documents.
    pub fn passing_test_ids(&self) -> BTreeSet<&str> {
        self.component_releases
            .values()
            .flat_map(|c| c.test_records.iter())
            .filter(|t| t.verdict == crate::model::TestVerdict::Pass)
            .map(|t| t.id.as_str())
            .collect()
    }

    /// All unresolved references, in one pass, sorted.
    pub fn dangling_references(&self) -> Vec<DanglingReference> {
        let mut out = Vec::new();
        let mut check = |from: String, field: &'static str, target: &RecordId, kinds: &[RecordKind]| {
            if !kinds.contains(&target.kind()) || !self.contains(target) {
                out.push(DanglingReference { from, field, target: target.to_string() });
            }
        };
        use RecordKind as K;
        for m in self.malfunctions.values() {
            check(m.id.to_string(), "component", &m.component, &[K::Component]);
        }
        for hs in self.hazardous_scenarios.values() {
            check(hs.id.to_string(), "scenario", &hs.scenario, &[K::OperationalScenario]);
            check(hs.id.to_string(), "malfunction", &hs.malfunction, &[K::Malfunction]);
            if let Some(h) = &hs.hazard {
                check(hs.id.to_string(), "hazard", h, &[K::Hazard]);
            }
        }
        for sg in self.safety_goals.values() {
            check(sg.id.to_string(), "hazard", &sg.hazard, &[K::Hazard]);
        }
        for r in self.requirements.values() {
            check(r.id.to_string(), "parent", &r.parent, &[K::SafetyGoal, K::FunctionalRequirement]);
            for c in &r.allocated_to {
                check(r.id.to_string(), "allocated_to", c, &[K::Component]);
            }
        }
        for c in self.components.values() {
            for p in &c.prototypes {
                check(c.id.to_string(), "prototypes", p, &[K::Prototype]);
            }
        }
        for crd in self.component_releases.values() {
            check(crd.id.to_string(), "component", &crd.component, &[K::Component]);
            for h in &crd.hazards_caused {
                check(crd.id.to_string(), "hazards_caused", h, &[K::Hazard]);
            }
            for r in &crd.covered_requirements {
                check(crd.id.to_string(), "covered_requirements", r, &[K::TechnicalRequirement]);
            }
            for t in &crd.test_records {
                for r in &t.requirement_refs {
                    check(format!("{}/{}", crd.id, t.id), "requirement_refs", r, &K::ALL);
                }
            }
        }
        for d in self.system_documents.values() {
            check(d.id.to_string(), "prototype", &d.prototype, &[K::Prototype]);
        }
        for r in self.reviews.values() {
            check(r.id.to_string(), "prototype", &r.prototype, &[K::Prototype]);
        }
        for d in self.decisions.values() {
            check(d.id.to_string(), "prototype", &d.prototype, &[K::Prototype]);
        }
        for c in &self.config.compositions {
            let from = format!("composition({} stage {})", c.prototype, c.stage);
            check(from.clone(), "prototype", &c.prototype, &[K::Prototype]);
            for m in &c.required_component_modules {
                check(from.clone(), "required_component_modules", m, &[K::Component]);
            }
        }
        // Journal record references are history: a record deleted later
        // shows up as a dangling entry on replay, not as an integrity error.

        let mut check_actor = |from: String, field: &'static str, actor: &ActorId| {
            if !self.actors.contains_key(actor) {
                out.push(DanglingReference { from, field, target: actor.to_string() });
            }
        };
        for c in self.components.values() {
            check_actor(c.id.to_string(), "developer", &c.developer);
        }
        for crd in self.component_releases.values() {
            if let Some(a) = &crd.released_by {
                check_actor(crd.id.to_string(), "released_by", a);
            }
        }
        for r in self.reviews.values() {
            check_actor(r.id.to_string(), "reviewer", &r.reviewer);
        }
        for d in self.decisions.values() {
            check_actor(d.id.to_string(), "decided_by", &d.decided_by);
        }
        for ev in &self.journal {
            check_actor(format!("journal#{}", ev.seq), "actor", &ev.actor);
        }
        out.sort();
        out
    }
}

fn record_id_of(record: &Record) -> Option<RecordId> {
    match record {
        Record::Actor(_) => None,
        Record::Prototype(r) => Some(r.id),
        Record::Scenario(r) => Some(r.id),
        Record::Malfunction(r) => Some(r.id),
        Record::Hazard(r) => Some(r.id),
        Record::HazardousScenario(r) => Some(r.id),
        Record::SafetyGoal(r) => Some(r.id),
        Record::Requirement(r) => Some(r.id),
        Record::Component(r) => Some(r.id),
        Record::ComponentRelease(r) => Some(r.id),
        Record::SystemDocument(r) => Some(r.id),
        Record::Review(r) => Some(r.id),
        Record::Decision(r) => Some(r.id),
    }
}

impl Record {
    pub fn record_id(&self) -> Option<RecordId> {
        record_id_of(self)
    }
}

/// Raised when records point at ids that do not exist.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{} dangling reference(s): {}", offenders.len(), join_offenders(offenders))]
pub struct IntegrityError {
    pub offenders: Vec<DanglingReference>,
}

fn join_offenders(offenders: &[DanglingReference]) -> String {
    offenders.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(", ")
}

impl Repository {
    /// Fails with every dangling reference at once.
    pub fn check_integrity(&self) -> Result<(), IntegrityError> {
        let offenders = self.dangling_references();
        if offenders.is_empty() {
            Ok(())
        } else {
            Err(IntegrityError { offenders })
        }
    }
}
