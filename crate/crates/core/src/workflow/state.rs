use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{DecisionVerdict, Recommendation, RecordId, ReleaseStatus, StageDefinition, StageNumber};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewEntry {
    pub review: RecordId,
    pub recommendation: Recommendation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionEntry {
    pub decision: RecordId,
    pub verdict: DecisionVerdict,
}

/// Workflow progress of one prototype.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrototypeProgress {
    pub granted: BTreeSet<StageNumber>,
    pub initial_analyses: bool,
    pub preliminary_concept: bool,
    /// Latest review per stage.
    pub reviews: BTreeMap<StageNumber, ReviewEntry>,
    /// Compiled release documents per stage, with their digest when known.
    pub compiled: BTreeMap<StageNumber, Option<String>>,
    pub decisions: BTreeMap<StageNumber, DecisionEntry>,
    pub operations: BTreeMap<StageNumber, u32>,
    pub accompanied_tests: u32,
}

impl PrototypeProgress {
    pub fn highest_granted(&self) -> Option<StageNumber> {
        self.granted.iter().next_back().copied()
    }
}

/// State obtained by folding the journal.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkflowState {
    pub last_seq: u64,
    pub prototypes: BTreeMap<RecordId, PrototypeProgress>,
    /// Release status per component release document; absent means Draft.
    pub releases: BTreeMap<RecordId, ReleaseStatus>,
    pub pending_mismatches: BTreeSet<RecordId>,
    pub documentation_updates: BTreeMap<RecordId, u32>,
    /// Journal entries (by seq) whose record has since been deleted; they
    /// are kept as history but contribute nothing to the state.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub dangling: BTreeMap<u64, RecordId>,
}

impl WorkflowState {
    pub fn progress(&self, prototype: &RecordId) -> Option<&PrototypeProgress> {
        self.prototypes.get(prototype)
    }

    pub fn granted(&self, prototype: &RecordId) -> BTreeSet<StageNumber> {
        self.progress(prototype).map(|p| p.granted.clone()).unwrap_or_default()
    }

    pub fn release_status(&self, crd: &RecordId) -> ReleaseStatus {
        self.releases.get(crd).copied().unwrap_or(ReleaseStatus::Draft)
    }

    pub(crate) fn progress_mut(&mut self, prototype: RecordId) -> &mut PrototypeProgress {
        self.prototypes.entry(prototype).or_default()
    }
}

/// Operating conditions of the highest granted stage, if any.
pub fn permissible_conditions<'a>(
    state: &WorkflowState,
    prototype: &RecordId,
    stages: &'a [StageDefinition],
) -> Option<&'a StageDefinition> {
    let highest = state.progress(prototype)?.highest_granted()?;
    stages.iter().find(|d| d.number == highest)
}
