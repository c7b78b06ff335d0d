//! Release preconditions: stage composition, traceability, mitigation
//! obligations and component-release template completeness.
//!
//! Every check returns issues naming the record that blocks release, so a
//! stalled stage can be traced to concrete root causes.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    hazard_rsil, ComponentReleaseDocument, DocumentStatus, MeasureStatus, MitigationStatus, Recommendation, RecordId,
    ReleaseStatus, RequirementKind, StageNumber,
};
use crate::repository::Repository;
use crate::workflow::WorkflowState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IssueCategory {
    MissingModule,
    BrokenTrace,
    UnmitigatedHazard,
    IncompleteTemplate,
    MissingReview,
    StaleRelease,
    UnverifiedMeasure,
}

impl IssueCategory {
    pub const ALL: [IssueCategory; 7] = [
        IssueCategory::MissingModule,
        IssueCategory::BrokenTrace,
        IssueCategory::UnmitigatedHazard,
        IssueCategory::IncompleteTemplate,
        IssueCategory::MissingReview,
        IssueCategory::StaleRelease,
        IssueCategory::UnverifiedMeasure,
    ];
}

impl fmt::Display for IssueCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Warnings are reported but never block a release.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Severity {
    Blocking,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub category: IssueCategory,
    pub subject: RecordId,
    pub message: String,
    pub severity: Severity,
}

impl ValidationIssue {
    fn blocking(category: IssueCategory, subject: RecordId, message: impl Into<String>) -> Self {
        ValidationIssue { category, subject, message: message.into(), severity: Severity::Blocking }
    }

    fn warning(category: IssueCategory, subject: RecordId, message: impl Into<String>) -> Self {
        ValidationIssue { category, subject, message: message.into(), severity: Severity::Warning }
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.category, self.subject, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("no stage composition configured for {prototype} stage {stage}")]
    MissingComposition { prototype: RecordId, stage: StageNumber },
    #[error("unknown prototype {0}")]
    UnknownPrototype(RecordId),
}

/// Everything that currently stands between a prototype and a stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadinessReport {
    pub prototype: RecordId,
    pub stage: StageNumber,
    pub issues: Vec<ValidationIssue>,
    pub warnings: Vec<ValidationIssue>,
    pub summary: BTreeMap<IssueCategory, usize>,
}

impl ReadinessReport {
    pub fn is_ready(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn count(&self, category: IssueCategory) -> usize {
        self.summary.get(&category).copied().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("reports always serialize");
        out.push('\n');
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "readiness {} stage {}: {} issue(s), {} warning(s)",
            self.prototype,
            self.stage,
            self.issues.len(),
            self.warnings.len()
        );
        for issue in &self.issues {
            let _ = writeln!(out, "  {issue}");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "  warning: {w}");
        }
        out
    }
}

/// Component release documents valid for `stage`: a release for a later
/// stage also covers the earlier, narrower ones.
fn releases_for_stage<'a>(
    repo: &'a Repository,
    component: &'a RecordId,
    stage: StageNumber,
) -> impl Iterator<Item = &'a ComponentReleaseDocument> + 'a {
    repo.releases_of(component).filter(move |c| c.stage >= stage)
}

/// The release document chosen to satisfy a required component module.
enum ModuleEvidence<'a> {
    Current(&'a ComponentReleaseDocument),
    Stale(&'a ComponentReleaseDocument),
    Missing,
}

fn module_evidence<'a>(
    repo: &'a Repository,
    state: &WorkflowState,
    component: &'a RecordId,
    stage: StageNumber,
) -> ModuleEvidence<'a> {
    let released: Vec<&ComponentReleaseDocument> = releases_for_stage(repo, component, stage)
        .filter(|c| state.release_status(&c.id) == ReleaseStatus::Released)
        .collect();
    if let Some(c) = released.iter().find(|c| !c.stale) {
        ModuleEvidence::Current(c)
    } else if let Some(c) = released.first() {
        ModuleEvidence::Stale(c)
    } else {
        ModuleEvidence::Missing
    }
}

/// Release document used as evidence for `component` at `stage`, with
/// whether it is stale. Current releases are preferred over stale ones.
pub fn selected_release<'a>(
    repo: &'a Repository,
    state: &WorkflowState,
    component: &'a RecordId,
    stage: StageNumber,
) -> Option<(&'a ComponentReleaseDocument, bool)> {
    match module_evidence(repo, state, component, stage) {
        ModuleEvidence::Current(c) => Some((c, false)),
        ModuleEvidence::Stale(c) => Some((c, true)),
        ModuleEvidence::Missing => None,
    }
}

/// Required modules that are not available for the stage.
pub fn check_composition(
    repo: &Repository,
    state: &WorkflowState,
    prototype: &RecordId,
    stage: StageNumber,
) -> Result<Vec<ValidationIssue>, ConfigError> {
    if !repo.prototypes.contains_key(prototype) {
        return Err(ConfigError::UnknownPrototype(*prototype));
    }
    let composition = repo
        .config
        .composition(prototype, stage)
        .ok_or(ConfigError::MissingComposition { prototype: *prototype, stage })?;

    let mut issues = Vec::new();
    for kind in &composition.required_system_docs {
        let doc = repo.system_documents.values().find(|d| &d.prototype == prototype && d.kind == *kind);
        match doc {
            Some(d) if d.status == DocumentStatus::Issued => {}
            Some(d) => issues.push(ValidationIssue::blocking(
                IssueCategory::MissingModule,
                d.id,
                format!("{} is not issued", kind.title()),
            )),
            None => issues.push(ValidationIssue::blocking(
                IssueCategory::MissingModule,
                *prototype,
                format!("{} is missing", kind.title()),
            )),
        }
    }
    for component in &composition.required_component_modules {
        let name = repo.components.get(component).map(|c| c.name.as_str()).unwrap_or("?");
        match module_evidence(repo, state, component, stage) {
            ModuleEvidence::Current(_) => {}
            ModuleEvidence::Stale(crd) => issues.push(ValidationIssue::blocking(
                IssueCategory::StaleRelease,
                crd.id,
                format!("release of {component} ({name}) is stale after a modification"),
            )),
            ModuleEvidence::Missing => issues.push(ValidationIssue::blocking(
                IssueCategory::MissingModule,
                *component,
                format!("no released component release document for {name} at stage {stage} or later"),
            )),
        }
    }
    Ok(issues)
}

/// Breaks in the hazard -> goal -> FSR -> TSR -> component release chain.
pub fn check_traceability(repo: &Repository) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    for hz in repo.hazards.keys() {
        if !repo.safety_goals.values().any(|sg| &sg.hazard == hz) {
            issues.push(ValidationIssue::blocking(IssueCategory::BrokenTrace, *hz, "hazard has no safety goal"));
        }
    }
    for sg in repo.safety_goals.keys() {
        if !repo.requirements.values().any(|r| r.kind == RequirementKind::Functional && &r.parent == sg) {
            issues.push(ValidationIssue::blocking(
                IssueCategory::BrokenTrace,
                *sg,
                "safety goal has no functional safety requirement",
            ));
        }
    }
    for req in repo.requirements.values() {
        match req.kind {
            RequirementKind::Functional => {
                if !repo.requirements.values().any(|t| t.kind == RequirementKind::Technical && t.parent == req.id) {
                    issues.push(ValidationIssue::warning(
                        IssueCategory::BrokenTrace,
                        req.id,
                        "functional requirement not yet refined into technical requirements",
                    ));
                }
            }
            RequirementKind::Technical => {
                if req.allocated_to.is_empty() {
                    issues.push(ValidationIssue::blocking(
                        IssueCategory::BrokenTrace,
                        req.id,
                        "technical requirement is not allocated to a component",
                    ));
                }
                for component in &req.allocated_to {
                    let releases: Vec<_> = repo.releases_of(component).collect();
                    if !releases.is_empty() && !releases.iter().any(|c| c.covered_requirements.contains(&req.id)) {
                        issues.push(ValidationIssue::blocking(
                            IssueCategory::BrokenTrace,
                            req.id,
                            format!("allocated to {component}, but no release document of it covers the requirement"),
                        ));
                    }
                }
            }
        }
    }
    issues
}

/// Hazards with RSIL >= 1 whose measures are not defined, implemented and tested.
pub fn check_mitigation(repo: &Repository) -> Vec<ValidationIssue> {
    let passing = repo.passing_test_ids();
    let mut issues = Vec::new();
    for hz in repo.hazards.values() {
        let rsil = hazard_rsil(repo, &hz.id);
        if !rsil.requires_measures() {
            continue;
        }
        if hz.mitigation_status != MitigationStatus::MeasuresTested {
            issues.push(ValidationIssue::blocking(
                IssueCategory::UnmitigatedHazard,
                hz.id,
                format!("{rsil} hazard is at {:?}", hz.mitigation_status),
            ));
        }
        for (i, m) in hz.measures.iter().enumerate() {
            if m.status != MeasureStatus::Tested {
                continue;
            }
            let verified = !m.verified_by.is_empty() && m.verified_by.iter().all(|t| passing.contains(t.as_str()));
            if !verified {
                issues.push(ValidationIssue::blocking(
                    IssueCategory::UnverifiedMeasure,
                    hz.id,
                    format!("measure #{i} ({}) is marked Tested without passing test records", m.description),
                ));
            }
        }
    }
    issues
}

/// Mandatory free-text template fields of a component release document.
pub const MANDATORY_TEXT_FIELDS: [&str; 5] = [
    "functions_and_interfaces",
    "subsystem_boundaries",
    "fallback_mechanisms",
    "known_limitations",
    "mitigation_strategies",
];

fn text_field<'a>(crd: &'a ComponentReleaseDocument, name: &str) -> &'a str {
    match name {
        "functions_and_interfaces" => &crd.functions_and_interfaces,
        "subsystem_boundaries" => &crd.subsystem_boundaries,
        "fallback_mechanisms" => &crd.fallback_mechanisms,
        "known_limitations" => &crd.known_limitations,
        "mitigation_strategies" => &crd.mitigation_strategies,
        _ => unreachable!("not a template field: {name}"),
    }
}

/// Template gaps of one component release document.
pub fn check_component_release(crd: &ComponentReleaseDocument) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    for field in MANDATORY_TEXT_FIELDS {
        if text_field(crd, field).trim().is_empty() {
            issues.push(ValidationIssue::blocking(
                IssueCategory::IncompleteTemplate,
                crd.id,
                format!("{field} is empty"),
            ));
        }
    }
    if crd.covered_requirements.is_empty() {
        issues.push(ValidationIssue::blocking(
            IssueCategory::IncompleteTemplate,
            crd.id,
            "covered_requirements is empty",
        ));
    }
    for req in &crd.covered_requirements {
        if !crd.has_pass_for(req) {
            issues.push(ValidationIssue::blocking(
                IssueCategory::IncompleteTemplate,
                crd.id,
                format!("{req} has no passing test record"),
            ));
        }
    }
    issues
}

/// Union of all checks for one prototype and stage, in stable order.
pub fn readiness_report(
    repo: &Repository,
    state: &WorkflowState,
    prototype: &RecordId,
    stage: StageNumber,
) -> Result<ReadinessReport, ConfigError> {
    let mut all = check_composition(repo, state, prototype, stage)?;
    all.extend(check_traceability(repo));
    all.extend(check_mitigation(repo));

    let composition = repo.config.composition(prototype, stage).expect("checked by check_composition");
    for component in &composition.required_component_modules {
        match module_evidence(repo, state, component, stage) {
            ModuleEvidence::Current(crd) | ModuleEvidence::Stale(crd) => all.extend(check_component_release(crd)),
            ModuleEvidence::Missing => {}
        }
    }

    let favourable = repo
        .reviews
        .values()
        .any(|r| &r.prototype == prototype && r.stage == stage && r.recommendation == Recommendation::For);
    if !favourable {
        all.push(ValidationIssue::blocking(
            IssueCategory::MissingReview,
            *prototype,
            format!("no review recommending release of stage {stage}"),
        ));
    }

    all.sort();
    all.dedup();
    let (issues, warnings): (Vec<_>, Vec<_>) = all.into_iter().partition(|i| i.severity == Severity::Blocking);
    let mut summary: BTreeMap<IssueCategory, usize> = IssueCategory::ALL.iter().map(|c| (*c, 0)).collect();
    for issue in &issues {
        *summary.entry(issue.category).or_default() += 1;
    }
    Ok(ReadinessReport { prototype: *prototype, stage, issues, warnings, summary })
}
