//! Structural invariant checks for individual records.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::records::*;
use super::stage::is_stage_prefix;
use super::{ActorId, RecordKind, Rsil};
use crate::repository::Repository;
use crate::risk::{asil_from_sec, rsil_from_asil};

/// Which invariant a violation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    IdKind,
    DanglingReference,
    GrantedStagesPrefix,
    StageMode,
    ClassRange,
    AssessmentConsistency,
    MitigationConsistency,
    MeasureVerification,
    SafetyGoalRsil,
    RequirementParent,
    TechnicalAllocation,
    InheritedRsil,
    ActorRole,
    TestRequirementRefs,
    ReleaseSignOff,
    TransparencyFields,
    SystemDocumentUnique,
    CompositionRoles,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InvariantViolation {
    pub subject: String,
    pub rule: Rule,
    pub message: String,
}

impl fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{:?}] {}", self.subject, self.rule, self.message)
    }
}

struct Sink<'a> {
    subject: String,
    out: &'a mut Vec<InvariantViolation>,
}

impl Sink<'_> {
    fn push(&mut self, rule: Rule, message: impl Into<String>) {
        self.out.push(InvariantViolation { subject: self.subject.clone(), rule, message: message.into() });
    }

    fn require_ref(&mut self, repo: &Repository, field: &str, id: &super::RecordId, kinds: &[RecordKind]) {
        if !kinds.contains(&id.kind()) {
            self.push(Rule::DanglingReference, format!("{field} must reference {kinds:?}, found {id}"));
        } else if !repo.contains(id) {
            self.push(Rule::DanglingReference, format!("{field} references missing {id}"));
        }
    }

    fn require_role(&mut self, repo: &Repository, field: &str, actor: &ActorId, role: Role) {
        match repo.actor(actor) {
            None => self.push(Rule::DanglingReference, format!("{field} references unknown actor {actor}")),
            Some(a) if a.role != role => {
                self.push(Rule::ActorRole, format!("{field} {actor} has role {}, requires {role}", a.role))
            }
            Some(_) => {}
        }
    }
}

/// Returns every invariant `record` violates; references resolve against `repo`.
pub fn validate_record(record: &Record, repo: &Repository) -> Vec<InvariantViolation> {
    let mut out = Vec::new();
    let mut sink = Sink { subject: record.label(), out: &mut out };

    if let Some(id) = record.record_id() {
        if !record.expected_kinds().contains(&id.kind()) {
            sink.push(Rule::IdKind, format!("id prefix {} does not match record type", id.kind()));
        }
    }

    use RecordKind as K;
    match record {
        Record::Actor(_) | Record::Scenario(_) => {}
        Record::Prototype(p) => {
            if !is_stage_prefix(&p.granted_stages) {
                sink.push(Rule::GrantedStagesPrefix, "granted stages not a prefix of 1..5");
            }
        }
        Record::Malfunction(m) => sink.require_ref(repo, "component", &m.component, &[K::Component]),
        Record::HazardousScenario(hs) => {
            sink.require_ref(repo, "scenario", &hs.scenario, &[K::OperationalScenario]);
            sink.require_ref(repo, "malfunction", &hs.malfunction, &[K::Malfunction]);
            if let Some(h) = &hs.hazard {
                sink.require_ref(repo, "hazard", h, &[K::Hazard]);
            }
            if let Some(a) = &hs.assessment {
                match asil_from_sec(&a.parameters) {
                    Err(e) => sink.push(Rule::ClassRange, e.to_string()),
                    Ok(asil) => {
                        if asil != a.asil {
                            sink.push(
                                Rule::AssessmentConsistency,
                                format!("{} gives {asil}, record states {}", a.parameters, a.asil),
                            );
                        }
                        if rsil_from_asil(a.asil) != a.rsil {
                            sink.push(
                                Rule::AssessmentConsistency,
                                format!("{} maps to {}, record states {}", a.asil, rsil_from_asil(a.asil), a.rsil),
                            );
                        }
                    }
                }
            }
        }
        Record::Hazard(h) => {
            let all_tested = h.measures.iter().all(|m| m.status == MeasureStatus::Tested);
            if h.mitigation_status == MitigationStatus::MeasuresTested && !all_tested {
                sink.push(Rule::MitigationConsistency, "status MeasuresTested but not every measure is Tested");
            }
            for (i, m) in h.measures.iter().enumerate() {
                if m.status == MeasureStatus::Tested && m.verified_by.is_empty() {
                    sink.push(
                        Rule::MeasureVerification,
                        format!("measure #{i} is Tested without verifying test records"),
                    );
                }
            }
        }
        Record::SafetyGoal(sg) => {
            sink.require_ref(repo, "hazard", &sg.hazard, &[K::Hazard]);
            let expected = hazard_rsil(repo, &sg.hazard);
            if sg.rsil != expected {
                sink.push(
                    Rule::SafetyGoalRsil,
                    format!("rsil is {}, maximum over hazardous scenarios of {} is {expected}", sg.rsil, sg.hazard),
                );
            }
        }
        Record::Requirement(r) => {
            let (id_kind, parent_kind) = match r.kind {
                RequirementKind::Functional => (K::FunctionalRequirement, K::SafetyGoal),
                RequirementKind::Technical => (K::TechnicalRequirement, K::FunctionalRequirement),
            };
            if r.id.kind() != id_kind {
                sink.push(Rule::IdKind, format!("{:?} requirement must carry a {id_kind} id", r.kind));
            }
            if r.parent.kind() != parent_kind {
                sink.push(
                    Rule::RequirementParent,
                    format!("{:?} requirement needs a {parent_kind} parent, found {}", r.kind, r.parent),
                );
            } else if !repo.contains(&r.parent) {
                sink.push(Rule::DanglingReference, format!("parent references missing {}", r.parent));
            } else if let Some(parent_rsil) = requirement_parent_rsil(repo, &r.parent) {
                if parent_rsil != r.inherited_rsil {
                    sink.push(
                        Rule::InheritedRsil,
                        format!("inherited {} differs from parent {} at {parent_rsil}", r.inherited_rsil, r.parent),
                    );
                }
            }
            if r.kind == RequirementKind::Technical && r.allocated_to.is_empty() {
                sink.push(Rule::TechnicalAllocation, "technical requirement is not allocated to any component");
            }
            for c in &r.allocated_to {
                sink.require_ref(repo, "allocated_to", c, &[K::Component]);
            }
        }
        Record::Component(c) => {
            sink.require_role(repo, "developer", &c.developer, Role::FunctionDeveloper);
            for p in &c.prototypes {
                sink.require_ref(repo, "prototypes", p, &[K::Prototype]);
            }
        }
        Record::ComponentRelease(crd) => validate_release(&mut sink, crd, repo),
        Record::SystemDocument(d) => {
            sink.require_ref(repo, "prototype", &d.prototype, &[K::Prototype]);
            let clash =
                repo.system_documents.values().find(|o| o.id != d.id && o.prototype == d.prototype && o.kind == d.kind);
            if let Some(other) = clash {
                sink.push(
                    Rule::SystemDocumentUnique,
                    format!("{} already holds the {:?} of {}", other.id, d.kind, d.prototype),
                );
            }
        }
        Record::Review(r) => {
            sink.require_ref(repo, "prototype", &r.prototype, &[K::Prototype]);
            sink.require_role(repo, "reviewer", &r.reviewer, Role::CertificationAgency);
        }
        Record::Decision(d) => {
            sink.require_ref(repo, "prototype", &d.prototype, &[K::Prototype]);
            sink.require_role(repo, "decided_by", &d.decided_by, Role::ReleaseCommittee);
        }
    }
    out
}

fn validate_release(sink: &mut Sink<'_>, crd: &ComponentReleaseDocument, repo: &Repository) {
    use RecordKind as K;
    sink.require_ref(repo, "component", &crd.component, &[K::Component]);
    for h in &crd.hazards_caused {
        sink.require_ref(repo, "hazards_caused", h, &[K::Hazard]);
    }
    for r in &crd.covered_requirements {
        sink.require_ref(repo, "covered_requirements", r, &[K::TechnicalRequirement]);
    }
    for t in &crd.test_records {
        if t.requirement_refs.is_empty() {
            sink.push(Rule::TestRequirementRefs, format!("test record {} references no requirement", t.id));
        }
    }
    if crd.release_status >= ReleaseStatus::Submitted {
        for (field, value) in
            [("known_limitations", &crd.known_limitations), ("fallback_mechanisms", &crd.fallback_mechanisms)]
        {
            if value.trim().is_empty() {
                sink.push(Rule::TransparencyFields, format!("{field} must be filled once submitted"));
            }
        }
    }
    if crd.release_status == ReleaseStatus::Released {
        let developer = repo.components.get(&crd.component).map(|c| &c.developer);
        match (&crd.released_by, developer) {
            (None, _) => sink.push(Rule::ReleaseSignOff, "released without a signing developer"),
            (Some(by), Some(dev)) if by != dev => sink
                .push(Rule::ReleaseSignOff, format!("released by {by}, but {} is developed by {dev}", crd.component)),
            _ => {}
        }
        for r in &crd.covered_requirements {
            if !crd.has_pass_for(r) {
                sink.push(Rule::ReleaseSignOff, format!("released without a passing test for {r}"));
            }
        }
    }
}

/// Maximum RSIL over the assessed hazardous scenarios of `hazard` (0 if none).
pub fn hazard_rsil(repo: &Repository, hazard: &super::RecordId) -> Rsil {
    repo.scenarios_of_hazard(hazard).filter_map(|hs| hs.assessment.map(|a| a.rsil)).max().unwrap_or(Rsil::ZERO)
}

fn requirement_parent_rsil(repo: &Repository, parent: &super::RecordId) -> Option<Rsil> {
    match parent.kind() {
        RecordKind::SafetyGoal => repo.safety_goals.get(parent).map(|sg| sg.rsil),
        RecordKind::FunctionalRequirement => repo.requirements.get(parent).map(|r| r.inherited_rsil),
        _ => None,
    }
}

/// Validates every record plus the repository configuration.
pub fn validate_repository(repo: &Repository) -> Vec<InvariantViolation> {
    let mut out: Vec<InvariantViolation> = repo.records().iter().flat_map(|r| validate_record(r, repo)).collect();

    for def in &repo.config.stages {
        if def.operating_mode != def.number.operating_mode() {
            out.push(InvariantViolation {
                subject: format!("stage {}", def.number),
                rule: Rule::StageMode,
                message: format!("stage {} must use {}", def.number, def.number.operating_mode()),
            });
        }
    }

    for c in &repo.config.compositions {
        if c.stage.get() < 3 {
            continue;
        }
        let mut roles: BTreeMap<ArchitectureRole, bool> = ArchitectureRole::ALL.iter().map(|r| (*r, false)).collect();
        for m in &c.required_component_modules {
            if let Some(role) = repo.components.get(m).and_then(|c| c.architecture_role) {
                roles.insert(role, true);
            }
        }
        for (role, present) in roles {
            if !present {
                out.push(InvariantViolation {
                    subject: format!("composition({} stage {})", c.prototype, c.stage),
                    rule: Rule::CompositionRoles,
                    message: format!("automated-operation stage requires a {role:?} component module"),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;
    use crate::model::{rid, stage, RiskParameters};
    use std::collections::BTreeSet;

    fn pristine() -> Repository {
        fixture::unicaragil()
    }

    #[test]
    fn pristine_fixture_has_no_violations() {
        let repo = pristine();
        assert_eq!(validate_repository(&repo), vec![]);
    }

    #[test]
    fn tested_hazard_is_valid() {
        let repo = pristine();
        let hz = Record::Hazard(repo.hazards[&rid("HZ-0001")].clone());
        assert!(validate_record(&hz, &repo).is_empty());
    }

    #[test]
    fn non_prefix_grant_is_one_violation() {
        let repo = pristine();
        let mut p = repo.prototypes[&rid("PRO-0001")].clone();
        p.granted_stages = BTreeSet::from([stage(1), stage(3)]);
        let v = validate_record(&Record::Prototype(p), &repo);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Rule::GrantedStagesPrefix);
        assert_eq!(v[0].message, "granted stages not a prefix of 1..5");
    }

    #[test]
    fn unallocated_tsr_is_one_violation() {
        let repo = pristine();
        let mut tsr = repo.requirements[&rid("TSR-0001")].clone();
        tsr.allocated_to.clear();
        let v = validate_record(&Record::Requirement(tsr), &repo);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].rule, Rule::TechnicalAllocation);
    }

    /// One minimal passing fixture and one single-field mutation per record type.
    #[test]
    fn each_type_has_a_failing_single_field_mutation() {
        let repo = pristine();
        let mut cases: Vec<(Record, Rule)> = Vec::new();

        let mut hs = repo.hazardous_scenarios[&rid("HS-0001")].clone();
        if let Some(a) = hs.assessment.as_mut() {
            a.parameters = RiskParameters::new(1, 1, 1);
        }
        cases.push((Record::HazardousScenario(hs), Rule::AssessmentConsistency));

        let mut hs = repo.hazardous_scenarios[&rid("HS-0001")].clone();
        if let Some(a) = hs.assessment.as_mut() {
            a.parameters.exposure = 9;
        }
        cases.push((Record::HazardousScenario(hs), Rule::ClassRange));

        let mut hz = repo.hazards[&rid("HZ-0001")].clone();
        hz.measures[0].status = MeasureStatus::Implemented;
        cases.push((Record::Hazard(hz), Rule::MitigationConsistency));

        let mut hz = repo.hazards[&rid("HZ-0001")].clone();
        hz.measures[0].verified_by.clear();
        cases.push((Record::Hazard(hz), Rule::MeasureVerification));

        let mut mf = repo.malfunctions[&rid("MF-0001")].clone();
        mf.component = rid("CMP-0099");
        cases.push((Record::Malfunction(mf), Rule::DanglingReference));

        let mut sg = repo.safety_goals[&rid("SG-0001")].clone();
        sg.rsil = Rsil::new(1).unwrap();
        cases.push((Record::SafetyGoal(sg), Rule::SafetyGoalRsil));

        let mut fsr = repo.requirements[&rid("FSR-0001")].clone();
        fsr.parent = rid("HZ-0001");
        cases.push((Record::Requirement(fsr), Rule::RequirementParent));

        let mut tsr = repo.requirements[&rid("TSR-0001")].clone();
        tsr.inherited_rsil = Rsil::ZERO;
        cases.push((Record::Requirement(tsr), Rule::InheritedRsil));

        let mut cmp = repo.components[&rid("CMP-0001")].clone();
        cmp.developer = ActorId::new("se-lead");
        cases.push((Record::Component(cmp), Rule::ActorRole));

        let mut crd = repo.component_releases[&rid("CRD-0001")].clone();
        crd.released_by = Some(ActorId::new("fd-lift"));
        cases.push((Record::ComponentRelease(crd), Rule::ReleaseSignOff));

        let mut crd = repo.component_releases[&rid("CRD-0001")].clone();
        crd.fallback_mechanisms = " ".into();
        cases.push((Record::ComponentRelease(crd), Rule::TransparencyFields));

        let mut crd = repo.component_releases[&rid("CRD-0001")].clone();
        crd.test_records[0].requirement_refs.clear();
        cases.push((Record::ComponentRelease(crd), Rule::TestRequirementRefs));

        let mut swd = repo.system_documents[&rid("SWD-0002")].clone();
        swd.kind = SystemDocumentKind::SafetyPlan;
        cases.push((Record::SystemDocument(swd), Rule::SystemDocumentUnique));

        let mut rvw = repo.reviews[&rid("RVW-0001")].clone();
        rvw.reviewer = ActorId::new("rc-chair");
        cases.push((Record::Review(rvw), Rule::ActorRole));

        let mut dec = repo.decisions[&rid("DEC-0001")].clone();
        dec.decided_by = ActorId::new("ca-auditor");
        cases.push((Record::Decision(dec), Rule::ActorRole));

        for (record, rule) in cases {
            let original = repo.get(&record.record_id().unwrap()).unwrap();
            assert!(validate_record(&original, &repo).is_empty(), "{} should pass", original.label());
            let v = validate_record(&record, &repo);
            assert_eq!(v.len(), 1, "{}: {v:?}", record.label());
            assert_eq!(v[0].rule, rule, "{}", record.label());
        }
    }

    #[test]
    fn wrong_id_kind_is_flagged() {
        let repo = pristine();
        let mut hz = repo.hazards[&rid("HZ-0001")].clone();
        hz.id = rid("SG-0042");
        let v = validate_record(&Record::Hazard(hz), &repo);
        assert_eq!(v.iter().filter(|v| v.rule == Rule::IdKind).count(), 1);
    }

    #[test]
    fn automated_stage_composition_needs_all_three_roles() {
        let mut repo = pristine();
        let comp = repo
            .config
            .compositions
            .iter_mut()
            .find(|c| c.prototype == rid("PRO-0003") && c.stage == stage(3))
            .unwrap();
        comp.required_component_modules.remove(&rid("CMP-0003"));
        let v = validate_repository(&repo);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Rule::CompositionRoles);
        assert!(v[0].message.contains("MotionControl"));
    }
}
