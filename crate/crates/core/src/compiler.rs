//! Release document assembly.
//!
//! A release document aggregates the system-wide documents of a prototype
//! and the component release documents required for one stage, followed by
//! the review documentation. Readiness issues other than missing modules do
//! not stop compilation; they are disclosed in an annex instead.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{
    ComponentReleaseDocument, OperatingMode, Recommendation, RecordId, RecordKind, ReleaseStatus, RequirementKind,
    ReviewRecord, Rsil, StageNumber, SystemDocumentKind, SystemWideDocument, TestVerdict,
};
use crate::repository::{IntegrityError, Repository};
use crate::risk::{hazard_log, hazard_log_summary, HazardLogEntry, HazardLogSummary};
use crate::store::to_canonical_json;
use crate::validation::{
    readiness_report, selected_release, ConfigError, IssueCategory, ReadinessReport, ValidationIssue,
};
use crate::workflow::WorkflowState;

/// Root claim of every safety case.
pub const TOP_LEVEL_CLAIM: &str = "absence of unreasonable risk";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRow {
    pub requirement: RecordId,
    pub statement: String,
    pub rsil: Rsil,
    pub allocated_to: Vec<RecordId>,
    /// Component release documents of this document that cover the requirement.
    pub covered_by: Vec<RecordId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub claim: String,
    pub evidence: Vec<String>,
    pub children: Vec<Claim>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemSection {
    pub kind: SystemDocumentKind,
    pub title: String,
    pub required: bool,
    pub documents: Vec<SystemWideDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hazard_log: Option<HazardLogSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_matrix: Option<Vec<TraceRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim_tree: Option<Claim>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HazardLogSection {
    pub entries: Vec<HazardLogEntry>,
    pub summary: HazardLogSummary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentModule {
    pub component: RecordId,
    pub name: String,
    pub stale: bool,
    pub release: ComponentReleaseDocument,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub sections: usize,
    pub component_modules: usize,
    pub words: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseDocument {
    pub prototype: RecordId,
    pub prototype_name: String,
    pub stage: StageNumber,
    pub stage_description: String,
    pub operating_mode: OperatingMode,
    pub operating_conditions: String,
    pub system_wide_section: Vec<SystemSection>,
    pub components_section: Vec<ComponentModule>,
    pub review_section: Option<ReviewRecord>,
    pub disclosed_issues: Vec<ValidationIssue>,
    pub warnings: Vec<ValidationIssue>,
    pub metrics: Metrics,
    /// `sha256:<hex>` over the canonical JSON of the document with this field empty.
    pub content_digest: String,
}

impl ReleaseDocument {
    pub fn component_ids(&self) -> Vec<RecordId> {
        self.components_section.iter().map(|m| m.component).collect()
    }

    /// Digest the document should carry given its other contents.
    pub fn compute_digest(&self) -> String {
        let mut body = self.clone();
        body.content_digest = String::new();
        let hash = Sha256::digest(to_canonical_json(&body).as_bytes());
        format!("sha256:{}", hex::encode(hash))
    }

    /// File name for a rendering in `format`.
    pub fn file_name(&self, format: Format) -> String {
        format!("release-{}-stage{}.{}", self.prototype, self.stage, format.extension())
    }
}

#[derive(Debug, Error)]
pub enum CompileError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Integrity(#[from] IntegrityError),
    #[error("compilation of {} stage {} refused: {} missing module(s)", .0.prototype, .0.stage, .0.count(IssueCategory::MissingModule))]
    MissingModules(ReadinessReport),
    #[error("no stage definition for stage {0}")]
    UnknownStage(StageNumber),
}

/// Assembles the release document of `prototype` for `stage`.
pub fn compile(
    repo: &Repository,
    state: &WorkflowState,
    prototype: &RecordId,
    stage: StageNumber,
) -> Result<ReleaseDocument, CompileError> {
    let report = readiness_report(repo, state, prototype, stage)?;
    if report.count(IssueCategory::MissingModule) > 0 {
        return Err(CompileError::MissingModules(report));
    }
    let proto = &repo.prototypes[prototype];
    let definition = repo.config.stage_definition(stage).ok_or(CompileError::UnknownStage(stage))?;
    let composition = repo.config.composition(prototype, stage).expect("readiness checked the composition");

    let components_section: Vec<ComponentModule> = composition
        .required_component_modules
        .iter()
        .map(|c| {
            let (crd, stale) = selected_release(repo, state, c, stage).expect("no missing modules");
            ComponentModule {
                component: *c,
                name: repo.components.get(c).map(|x| x.name.clone()).unwrap_or_default(),
                stale,
                release: crd.clone(),
            }
        })
        .collect();

    let trace_matrix = trace_rows(repo, &components_section);
    let entries = hazard_log(repo)?;
    let summary = hazard_log_summary(repo)?;

    let system_wide_section = SystemDocumentKind::ALL
        .into_iter()
        .map(|kind| {
            let documents: Vec<SystemWideDocument> = repo
                .system_documents
                .values()
                .filter(|d| &d.prototype == prototype && d.kind == kind)
                .cloned()
                .collect();
            SystemSection {
                kind,
                title: kind.title().to_string(),
                required: composition.required_system_docs.contains(&kind),
                documents,
                hazard_log: (kind == SystemDocumentKind::HazardAnalysisRiskAssessment)
                    .then(|| HazardLogSection { entries: entries.clone(), summary: summary.clone() }),
                trace_matrix: (kind == SystemDocumentKind::TechnicalSafetyConcept).then(|| trace_matrix.clone()),
                claim_tree: (kind == SystemDocumentKind::SafetyCase)
                    .then(|| claim_tree(repo, &proto.name, prototype, stage, &components_section)),
            }
        })
        .collect();

    let review_section = repo
        .reviews
        .values()
        .filter(|r| &r.prototype == prototype && r.stage == stage)
        .max_by_key(|r| (r.recommendation == Recommendation::For, r.id))
        .cloned();

    let mut doc = ReleaseDocument {
        prototype: *prototype,
        prototype_name: proto.name.clone(),
        stage,
        stage_description: definition.description.clone(),
        operating_mode: definition.operating_mode,
        operating_conditions: definition.operating_conditions.clone(),
        system_wide_section,
        components_section,
        review_section,
        disclosed_issues: report.issues,
        warnings: report.warnings,
        metrics: Metrics { sections: 0, component_modules: 0, words: 0 },
        content_digest: String::new(),
    };
    doc.metrics = metrics(&doc);
    doc.content_digest = doc.compute_digest();
    Ok(doc)
}

/// TSRs allocated to the document's components, each with the CRDs covering it.
fn trace_rows(repo: &Repository, modules: &[ComponentModule]) -> Vec<TraceRow> {
    repo.requirements
        .values()
        .filter(|r| r.kind == RequirementKind::Technical)
        .filter(|r| r.allocated_to.iter().any(|c| modules.iter().any(|m| &m.component == c)))
        .map(|r| TraceRow {
            requirement: r.id,
            statement: r.statement.clone(),
            rsil: r.inherited_rsil,
            allocated_to: r.allocated_to.clone(),
            covered_by: modules
                .iter()
                .filter(|m| m.release.covered_requirements.contains(&r.id))
                .map(|m| m.release.id)
                .collect(),
        })
        .collect()
}

fn claim_tree(
    repo: &Repository,
    name: &str,
    prototype: &RecordId,
    stage: StageNumber,
    modules: &[ComponentModule],
) -> Claim {
    let children = repo
        .safety_goals
        .values()
        .map(|sg| {
            let mut evidence = vec![format!("hazard {}", sg.hazard)];
            let fsrs: Vec<RecordId> = repo
                .requirements
                .values()
                .filter(|r| r.kind == RequirementKind::Functional && r.parent == sg.id)
                .map(|r| r.id)
                .collect();
            for fsr in &fsrs {
                evidence.push(format!("functional requirement {fsr}"));
                for tsr in
                    repo.requirements.values().filter(|r| r.kind == RequirementKind::Technical && r.parent == *fsr)
                {
                    let mut line = format!("technical requirement {}", tsr.id);
                    for m in modules.iter().filter(|m| m.release.covered_requirements.contains(&tsr.id)) {
                        let tests: Vec<&str> = m
                            .release
                            .test_records
                            .iter()
                            .filter(|t| t.verdict == TestVerdict::Pass && t.requirement_refs.contains(&tsr.id))
                            .map(|t| t.id.as_str())
                            .collect();
                        let _ = write!(line, "; {} tests {}", m.release.id, tests.join(", "));
                    }
                    evidence.push(line);
                }
            }
            if let Some(hz) = repo.hazards.get(&sg.hazard) {
                for m in &hz.measures {
                    evidence.push(format!("measure ({:?}, {:?}): {}", m.kind, m.status, m.description));
                }
            }
            Claim { claim: format!("{} [{}]: {}", sg.id, sg.rsil, sg.statement), evidence, children: vec![] }
        })
        .collect();
    Claim {
        claim: format!("{TOP_LEVEL_CLAIM} for {name} ({prototype}) operated at stage {stage}"),
        evidence: vec![],
        children,
    }
}

fn words(text: &str) -> usize {
    text.split_whitespace().count()
}

fn metrics(doc: &ReleaseDocument) -> Metrics {
    let mut count = 0;
    for section in &doc.system_wide_section {
        for d in &section.documents {
            count += words(&d.content);
            count += d.sections.iter().map(|s| words(&s.title) + words(&s.body)).sum::<usize>();
        }
    }
    for m in &doc.components_section {
        let c = &m.release;
        count += [
            &c.functions_and_interfaces,
            &c.subsystem_boundaries,
            &c.fallback_mechanisms,
            &c.known_limitations,
            &c.mitigation_strategies,
        ]
        .iter()
        .map(|t| words(t))
        .sum::<usize>();
    }
    if let Some(r) = &doc.review_section {
        count += words(&r.notes);
    }
    Metrics {
        // system-wide kinds + components + review + disclosed issues
        sections: doc.system_wide_section.len() + 3,
        component_modules: doc.components_section.len(),
        words: count,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Text => "txt",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown format `{0}` (expected text or json)")]
pub struct UnknownFormat(pub String);

impl FromStr for Format {
    type Err = UnknownFormat;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" | "txt" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            other => Err(UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Text => "text",
            Format::Json => "json",
        })
    }
}

pub fn render(doc: &ReleaseDocument, format: Format) -> String {
    match format {
        Format::Json => to_canonical_json(doc),
        Format::Text => render_text(doc),
    }
}

/// Writes both renderings into `dir` and returns their paths.
pub fn write_outputs(doc: &ReleaseDocument, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for format in [Format::Text, Format::Json] {
        let path = dir.join(doc.file_name(format));
        std::fs::write(&path, render(doc, format))?;
        out.push(path);
    }
    Ok(out)
}

fn indent(out: &mut String, text: &str, pad: &str) {
    for line in text.lines() {
        let _ = writeln!(out, "{pad}{line}");
    }
}

fn render_claim(out: &mut String, claim: &Claim, depth: usize) {
    let pad = "  ".repeat(depth);
    let _ = writeln!(out, "{pad}[claim] {}", claim.claim);
    for e in &claim.evidence {
        let _ = writeln!(out, "{pad}    evidence: {e}");
    }
    for c in &claim.children {
        render_claim(out, c, depth + 1);
    }
}

fn render_text(doc: &ReleaseDocument) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "RELEASE DOCUMENT");
    let _ = writeln!(w, "prototype:  {} ({})", doc.prototype_name, doc.prototype);
    let _ = writeln!(w, "stage:      {} - {}", doc.stage, doc.stage_description);
    let _ = writeln!(w, "mode:       {}", doc.operating_mode);
    let _ = writeln!(w, "conditions: {}", doc.operating_conditions);
    let _ = writeln!(w, "digest:     {}", doc.content_digest);
    let _ = writeln!(
        w,
        "metrics:    {} sections, {} component modules, {} words",
        doc.metrics.sections, doc.metrics.component_modules, doc.metrics.words
    );
    let _ = writeln!(w);

    let mut titles: Vec<String> = doc.system_wide_section.iter().map(|s| s.title.clone()).collect();
    titles.extend(["Component release documents".into(), "Review documentation".into(), "Disclosed issues".into()]);
    let _ = writeln!(w, "CONTENTS");
    for (i, t) in titles.iter().enumerate() {
        let _ = writeln!(w, "  {:>2}. {t}", i + 1);
    }

    for (i, section) in doc.system_wide_section.iter().enumerate() {
        let _ = writeln!(w);
        let _ = writeln!(w, "{}. {}", i + 1, section.title.to_uppercase());
        if section.documents.is_empty() {
            let _ = writeln!(w, "  (no document{})", if section.required { "; required for this stage" } else { "" });
        }
        for d in &section.documents {
            let _ = writeln!(w, "  [{} {:?}]", d.id, d.status);
            indent(w, &d.content, "  ");
            for s in &d.sections {
                let _ = writeln!(w, "  -- {}", s.title);
                indent(w, &s.body, "     ");
            }
        }
        if let Some(log) = &section.hazard_log {
            let _ = writeln!(w, "  Hazard log");
            let _ = writeln!(w, "  {:<8} {:<7} {:<20} {:<24} description", "hazard", "rsil", "status", "scenarios");
            for e in &log.entries {
                let scenarios = e.scenarios.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",");
                let _ = writeln!(
                    w,
                    "  {:<8} {:<7} {:<20} {:<24} {}",
                    e.hazard.to_string(),
                    e.rsil.to_string(),
                    format!("{:?}", e.mitigation_status),
                    scenarios,
                    e.description
                );
            }
            let per_rsil: Vec<String> =
                log.summary.per_rsil.iter().enumerate().map(|(l, n)| format!("RSIL {l}: {n}")).collect();
            let _ = writeln!(
                w,
                "  total {}; {}; unresolved {}",
                log.summary.total,
                per_rsil.join(", "),
                log.summary.unresolved.len()
            );
        }
        if let Some(rows) = &section.trace_matrix {
            let _ = writeln!(w, "  Trace matrix (technical requirement -> component release documents)");
            let _ = writeln!(w, "  {:<9} {:<7} {:<20} covered by", "tsr", "rsil", "allocated");
            for r in rows {
                let allocated = r.allocated_to.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
                let covered = if r.covered_by.is_empty() {
                    "-- not covered --".to_string()
                } else {
                    r.covered_by.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
                };
                let _ = writeln!(
                    w,
                    "  {:<9} {:<7} {:<20} {}",
                    r.requirement.to_string(),
                    r.rsil.to_string(),
                    allocated,
                    covered
                );
            }
        }
        if let Some(tree) = &section.claim_tree {
            let _ = writeln!(w, "  Safety argument");
            render_claim(w, tree, 1);
        }
    }

    let n = doc.system_wide_section.len();
    let _ = writeln!(w);
    let _ = writeln!(w, "{}. COMPONENT RELEASE DOCUMENTS", n + 1);
    if doc.components_section.is_empty() {
        let _ = writeln!(w, "  (no component modules required for this stage)");
    }
    for m in &doc.components_section {
        let c = &m.release;
        let _ = writeln!(
            w,
            "  [{}] {} ({}) - released for stage {}{}",
            c.id,
            m.name,
            m.component,
            c.stage,
            if m.stale { " - STALE" } else { "" }
        );
        for (label, text) in [
            ("functions and interfaces", &c.functions_and_interfaces),
            ("subsystem boundaries", &c.subsystem_boundaries),
            ("fallback mechanisms", &c.fallback_mechanisms),
            ("known limitations", &c.known_limitations),
            ("mitigation strategies", &c.mitigation_strategies),
        ] {
            let _ = writeln!(w, "    {label}: {text}");
        }
        let join = |ids: &[RecordId]| ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ");
        let _ = writeln!(w, "    hazards caused: {}", join(&c.hazards_caused));
        let _ = writeln!(w, "    covered requirements: {}", join(&c.covered_requirements));
        for t in &c.test_records {
            let _ = writeln!(
                w,
                "    test {} {:?} {:?} (stage {}) -> {}",
                t.id,
                t.verdict,
                t.environment,
                t.stage_context,
                join(&t.requirement_refs)
            );
        }
        if c.release_status != ReleaseStatus::Released {
            let _ = writeln!(w, "    record status: {:?}", c.release_status);
        }
    }

    let _ = writeln!(w);
    let _ = writeln!(w, "{}. REVIEW DOCUMENTATION", n + 2);
    match &doc.review_section {
        Some(r) => {
            let _ = writeln!(w, "  [{}] {:?} by {}", r.id, r.recommendation, r.reviewer);
            indent(w, &r.notes, "  ");
        }
        None => {
            let _ = writeln!(w, "  (no review recorded)");
        }
    }

    let _ = writeln!(w);
    let _ = writeln!(w, "{}. DISCLOSED ISSUES", n + 3);
    if doc.disclosed_issues.is_empty() && doc.warnings.is_empty() {
        let _ = writeln!(w, "  none");
    }
    for i in &doc.disclosed_issues {
        let _ = writeln!(w, "  {i}");
    }
    for i in &doc.warnings {
        let _ = writeln!(w, "  warning: {i}");
    }
    out
}

/// Draft release document for `component` with every template field empty
/// and `hazards_caused` pre-filled from the component's malfunctions.
pub fn component_template(repo: &Repository, component: &RecordId, stage: StageNumber) -> ComponentReleaseDocument {
    let malfunctions: Vec<RecordId> =
        repo.malfunctions.values().filter(|m| &m.component == component).map(|m| m.id).collect();
    let hazards_caused = repo
        .hazardous_scenarios
        .values()
        .filter(|hs| malfunctions.contains(&hs.malfunction))
        .filter_map(|hs| hs.hazard)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    ComponentReleaseDocument {
        id: repo.next_id(RecordKind::ComponentRelease),
        component: *component,
        stage,
        functions_and_interfaces: String::new(),
        subsystem_boundaries: String::new(),
        fallback_mechanisms: String::new(),
        known_limitations: String::new(),
        hazards_caused,
        covered_requirements: vec![],
        mitigation_strategies: String::new(),
        test_records: vec![],
        release_status: ReleaseStatus::Draft,
        released_by: None,
        stale: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::{self, FAMILY, LIFT};
    use crate::model::{rid, stage};
    use crate::validation::check_component_release;
    use crate::workflow::replay;

    fn family(s: u8) -> ReleaseDocument {
        let repo = fixture::unicaragil();
        let state = replay(&repo.journal, &repo).unwrap();
        compile(&repo, &state, &rid(FAMILY), stage(s)).unwrap()
    }

    #[test]
    fn stage_five_includes_the_lift() {
        let doc = family(5);
        assert!(doc.component_ids().contains(&rid(LIFT)));
        assert_eq!(doc.components_section.len(), 4);
        assert!(doc.disclosed_issues.is_empty());
    }

    #[test]
    fn text_has_one_trace_row_per_tsr() {
        let doc = family(5);
        let text = render(&doc, Format::Text);
        let rows = text.lines().filter(|l| l.trim_start().starts_with("TSR-")).count();
        assert_eq!(rows, 6);
        assert!(text.contains("none"));
    }

    #[test]
    fn text_has_a_section_per_system_document_kind() {
        let text = render(&family(1), Format::Text);
        for kind in SystemDocumentKind::ALL {
            assert!(text.contains(&kind.title().to_uppercase()), "{kind:?}");
        }
    }

    #[test]
    fn json_round_trips() {
        let doc = family(4);
        let back: ReleaseDocument = serde_json::from_str(&render(&doc, Format::Json)).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.compute_digest(), doc.content_digest);
    }

    #[test]
    fn claim_tree_root_and_children() {
        let doc = family(5);
        let tree = doc.system_wide_section.iter().find_map(|s| s.claim_tree.clone()).unwrap();
        assert!(tree.claim.starts_with(TOP_LEVEL_CLAIM));
        assert_eq!(tree.children.len(), 4);
    }

    #[test]
    fn unknown_format_is_rejected() {
        assert!("pdf".parse::<Format>().is_err());
        assert_eq!("json".parse::<Format>().unwrap(), Format::Json);
    }

    #[test]
    fn lift_template_lists_both_hazards_and_fails_template_checks_only() {
        let repo = fixture::unicaragil();
        let skeleton = component_template(&repo, &rid(LIFT), stage(5));
        assert_eq!(skeleton.hazards_caused, vec![rid("HZ-0003"), rid("HZ-0004")]);
        let issues = check_component_release(&skeleton);
        assert_eq!(issues.len(), 6);
        assert!(issues.iter().all(|i| i.category == IssueCategory::IncompleteTemplate));
    }

    #[test]
    fn file_names() {
        let doc = family(5);
        assert_eq!(doc.file_name(Format::Text), "release-PRO-0003-stage5.txt");
    }
}
