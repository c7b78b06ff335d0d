//! Read models shared by `status` and the review service.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::model::{RecordId, RequirementKind, StageNumber};
use crate::repository::{IntegrityError, Repository};
use crate::risk::{hazard_log_summary, HazardLogSummary};
use crate::validation::{check_traceability, readiness_report, ValidationIssue};
use crate::workflow::WorkflowState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "issues")]
pub enum CellStatus {
    Granted,
    Ready,
    Blocked(usize),
    /// No stage composition configured.
    Unconfigured,
}

impl fmt::Display for CellStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellStatus::Granted => f.write_str("granted"),
            CellStatus::Ready => f.write_str("ready"),
            CellStatus::Blocked(n) => write!(f, "blocked({n})"),
            CellStatus::Unconfigured => f.write_str("-"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadinessCell {
    pub stage: StageNumber,
    #[serde(flatten)]
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrototypeView {
    pub id: RecordId,
    pub name: String,
    pub use_case: String,
    pub granted: Vec<StageNumber>,
    pub cells: Vec<ReadinessCell>,
}

pub fn readiness_cell(
    repo: &Repository,
    state: &WorkflowState,
    prototype: &RecordId,
    stage: StageNumber,
) -> ReadinessCell {
    let status = if state.granted(prototype).contains(&stage) {
        CellStatus::Granted
    } else {
        match readiness_report(repo, state, prototype, stage) {
            Ok(r) if r.is_ready() => CellStatus::Ready,
            Ok(r) => CellStatus::Blocked(r.issues.len()),
            Err(_) => CellStatus::Unconfigured,
        }
    };
    ReadinessCell { stage, status }
}

pub fn prototype_views(repo: &Repository, state: &WorkflowState) -> Vec<PrototypeView> {
    repo.prototypes
        .values()
        .map(|p| PrototypeView {
            id: p.id,
            name: p.name.clone(),
            use_case: p.use_case.clone(),
            granted: state.granted(&p.id).into_iter().collect(),
            cells: StageNumber::all().map(|s| readiness_cell(repo, state, &p.id, s)).collect(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusView {
    pub prototypes: Vec<PrototypeView>,
    pub hazard_log: HazardLogSummary,
    pub pending_mismatches: Vec<RecordId>,
    /// Journal seq -> record deleted after the event was written.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub dangling: BTreeMap<u64, RecordId>,
}

pub fn status_view(repo: &Repository, state: &WorkflowState) -> Result<StatusView, IntegrityError> {
    Ok(StatusView {
        prototypes: prototype_views(repo, state),
        hazard_log: hazard_log_summary(repo)?,
        pending_mismatches: state.pending_mismatches.iter().copied().collect(),
        dangling: state.dangling.clone(),
    })
}

impl StatusView {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<10} {:<14}", "prototype", "name");
        for s in StageNumber::all() {
            let _ = write!(out, " {:<12}", format!("stage {s}"));
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
        for p in &self.prototypes {
            let _ = write!(out, "{:<10} {:<14}", p.id.to_string(), p.name);
            for c in &p.cells {
                let _ = write!(out, " {:<12}", c.status.to_string());
            }
            out.truncate(out.trim_end().len());
            out.push('\n');
        }
        let h = &self.hazard_log;
        let _ = writeln!(out);
        let per_rsil: Vec<String> = h.per_rsil.iter().enumerate().map(|(l, n)| format!("RSIL {l}: {n}")).collect();
        let _ = writeln!(out, "hazards: {} ({})", h.total, per_rsil.join(", "));
        let _ = writeln!(out, "unresolved hazards: {}", h.unresolved.len());
        for e in &h.unresolved {
            let _ = writeln!(out, "  {} {} {:?}", e.hazard, e.rsil, e.mitigation_status);
        }
        let mismatches: Vec<String> = self.pending_mismatches.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(
            out,
            "pending mismatches: {}",
            if mismatches.is_empty() { "none".to_string() } else { mismatches.join(", ") }
        );
        for (seq, record) in &self.dangling {
            let _ = writeln!(out, "journal #{seq} refers to deleted record {record}");
        }
        out
    }
}

/// One hazard -> goal -> FSR -> TSR -> release chain; a `None` link or an
/// empty release list marks where the chain breaks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceChain {
    pub hazard: RecordId,
    pub safety_goal: Option<RecordId>,
    pub functional: Option<RecordId>,
    pub technical: Option<RecordId>,
    pub components: Vec<RecordId>,
    pub component_releases: Vec<RecordId>,
    pub broken: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceabilityView {
    pub chains: Vec<TraceChain>,
    pub issues: Vec<ValidationIssue>,
    pub warnings: Vec<ValidationIssue>,
}

pub fn traceability_view(repo: &Repository) -> TraceabilityView {
    let mut chains = Vec::new();
    let chain = |hazard, sg, fsr, tsr| TraceChain {
        hazard,
        safety_goal: sg,
        functional: fsr,
        technical: tsr,
        components: vec![],
        component_releases: vec![],
        broken: true,
    };
    for hz in repo.hazards.keys() {
        let goals: Vec<_> = repo.safety_goals.values().filter(|sg| &sg.hazard == hz).collect();
        if goals.is_empty() {
            chains.push(chain(*hz, None, None, None));
        }
        for sg in goals {
            let fsrs: Vec<_> = repo
                .requirements
                .values()
                .filter(|r| r.kind == RequirementKind::Functional && r.parent == sg.id)
                .collect();
            if fsrs.is_empty() {
                chains.push(chain(*hz, Some(sg.id), None, None));
            }
            for fsr in fsrs {
                let tsrs: Vec<_> = repo
                    .requirements
                    .values()
                    .filter(|r| r.kind == RequirementKind::Technical && r.parent == fsr.id)
                    .collect();
                if tsrs.is_empty() {
                    chains.push(chain(*hz, Some(sg.id), Some(fsr.id), None));
                }
                for tsr in tsrs {
                    let releases: Vec<RecordId> = repo
                        .component_releases
                        .values()
                        .filter(|c| c.covered_requirements.contains(&tsr.id))
                        .map(|c| c.id)
                        .collect();
                    let broken = releases.is_empty() || tsr.allocated_to.is_empty();
                    chains.push(TraceChain {
                        hazard: *hz,
                        safety_goal: Some(sg.id),
                        functional: Some(fsr.id),
                        technical: Some(tsr.id),
                        components: tsr.allocated_to.clone(),
                        component_releases: releases,
                        broken,
                    });
                }
            }
        }
    }
    let mut issues = check_traceability(repo);
    issues.sort();
    let (issues, warnings) = issues.into_iter().partition(|i| i.severity == crate::validation::Severity::Blocking);
    TraceabilityView { chains, issues, warnings }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::{self, FAMILY, SHUTTLE};
    use crate::model::{rid, stage};
    use crate::workflow::{mark_stale, replay};

    #[test]
    fn fixture_grid() {
        let repo = fixture::unicaragil();
        let state = replay(&repo.journal, &repo).unwrap();
        let views = prototype_views(&repo, &state);
        let family = views.iter().find(|v| v.id == rid(FAMILY)).unwrap();
        assert!(family.cells.iter().all(|c| c.status == CellStatus::Granted));
        // the shuttle has neither documents nor reviews
        let shuttle = views.iter().find(|v| v.id == rid(SHUTTLE)).unwrap();
        assert!(matches!(shuttle.cells[0].status, CellStatus::Blocked(_)));
    }

    #[test]
    fn stale_lift_blocks_stage_five_once() {
        let mut repo = fixture::unicaragil();
        repo.journal.truncate(22);
        let repo = mark_stale(&repo, &rid(fixture::LIFT));
        let state = replay(&repo.journal, &repo).unwrap();
        assert_eq!(readiness_cell(&repo, &state, &rid(FAMILY), stage(5)).status, CellStatus::Blocked(1));
    }

    #[test]
    fn fixture_chains_are_whole() {
        let view = traceability_view(&fixture::unicaragil());
        assert_eq!(view.chains.len(), 6);
        assert!(view.chains.iter().all(|c| !c.broken));
        assert!(view.issues.is_empty());
    }

    #[test]
    fn cell_labels() {
        assert_eq!(CellStatus::Blocked(3).to_string(), "blocked(3)");
        let json = serde_json::to_string(&ReadinessCell { stage: stage(2), status: CellStatus::Blocked(1) }).unwrap();
        assert_eq!(json, r#"{"stage":2,"status":"Blocked","issues":1}"#);
    }
}
