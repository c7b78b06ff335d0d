//! Record types stored in a release repository.
//!
//! Field order in each struct is the canonical key order of its JSON file.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::classes::{AsilLevel, RiskParameters, Rsil};
use super::ids::{ActorId, RecordId, RecordKind};
use super::stage::StageNumber;

/// The four swimlanes of the release workflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    FunctionDeveloper,
    SafetyEngineer,
    CertificationAgency,
    ReleaseCommittee,
}

impl Role {
    pub const ALL: [Role; 4] =
        [Role::FunctionDeveloper, Role::SafetyEngineer, Role::CertificationAgency, Role::ReleaseCommittee];
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Actor {
    pub id: ActorId,
    pub name: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prototype {
    pub id: RecordId,
    pub name: String,
    pub use_case: String,
    /// Projection of the journal; must stay a prefix of `1..=5`.
    #[serde(default)]
    pub granted_stages: BTreeSet<StageNumber>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioKind {
    VehicleDynamic,
    Boarding,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperationalScenario {
    pub id: RecordId,
    pub kind: ScenarioKind,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Malfunction {
    pub id: RecordId,
    pub component: RecordId,
    pub description: String,
}

/// Risk parameters together with the levels derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskAssessment {
    pub parameters: RiskParameters,
    pub asil: AsilLevel,
    pub rsil: Rsil,
}

/// An operational scenario coupled with a component malfunction.
///
/// Drafts carry neither a hazard link nor an assessment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HazardousScenario {
    pub id: RecordId,
    pub scenario: RecordId,
    pub malfunction: RecordId,
    pub hazard: Option<RecordId>,
    pub assessment: Option<RiskAssessment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MitigationStatus {
    Open,
    MeasuresDefined,
    MeasuresImplemented,
    MeasuresTested,
}

impl MitigationStatus {
    pub const ALL: [MitigationStatus; 4] = [
        MitigationStatus::Open,
        MitigationStatus::MeasuresDefined,
        MitigationStatus::MeasuresImplemented,
        MitigationStatus::MeasuresTested,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasureKind {
    Technical,
    Organizational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MeasureStatus {
    Defined,
    Implemented,
    Tested,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Measure {
    pub kind: MeasureKind,
    pub description: String,
    pub status: MeasureStatus,
    /// Ids of test records (held in component release documents).
    pub verified_by: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hazard {
    pub id: RecordId,
    pub description: String,
    pub mitigation_status: MitigationStatus,
    pub measures: Vec<Measure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafetyGoal {
    pub id: RecordId,
    pub hazard: RecordId,
    pub statement: String,
    pub rsil: Rsil,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RequirementKind {
    Functional,
    Technical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafetyRequirement {
    pub id: RecordId,
    pub kind: RequirementKind,
    pub parent: RecordId,
    pub statement: String,
    pub allocated_to: Vec<RecordId>,
    pub inherited_rsil: Rsil,
}

/// Sense-plan-act role of a component, used by stage compositions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArchitectureRole {
    EnvironmentPerception,
    BehaviorPlanning,
    MotionControl,
}

impl ArchitectureRole {
    pub const ALL: [ArchitectureRole; 3] =
        [ArchitectureRole::EnvironmentPerception, ArchitectureRole::BehaviorPlanning, ArchitectureRole::MotionControl];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub id: RecordId,
    pub name: String,
    pub developer: ActorId,
    pub prototypes: BTreeSet<RecordId>,
    pub architecture_role: Option<ArchitectureRole>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestEnvironment {
    Simulation,
    FaultInjection,
    ClosedCourse,
    DemonstrationScenario,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestVerdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestRecord {
    pub id: String,
    pub requirement_refs: Vec<RecordId>,
    pub environment: TestEnvironment,
    pub verdict: TestVerdict,
    pub stage_context: StageNumber,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReleaseStatus {
    #[default]
    Draft,
    Submitted,
    MismatchFlagged,
    Released,
}

/// Developer-signed release module for one component at one stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentReleaseDocument {
    pub id: RecordId,
    pub component: RecordId,
    pub stage: StageNumber,
    pub functions_and_interfaces: String,
    pub subsystem_boundaries: String,
    pub fallback_mechanisms: String,
    pub known_limitations: String,
    pub hazards_caused: Vec<RecordId>,
    pub covered_requirements: Vec<RecordId>,
    pub mitigation_strategies: String,
    pub test_records: Vec<TestRecord>,
    #[serde(default)]
    pub release_status: ReleaseStatus,
    #[serde(default)]
    pub released_by: Option<ActorId>,
    #[serde(default)]
    pub stale: bool,
}

impl ComponentReleaseDocument {
    /// Whether a passing test record references `requirement`.
    pub fn has_pass_for(&self, requirement: &RecordId) -> bool {
        self.test_records.iter().any(|t| t.verdict == TestVerdict::Pass && t.requirement_refs.contains(requirement))
    }

    /// Released and not invalidated by a later modification.
    pub fn is_current_release(&self) -> bool {
        self.release_status == ReleaseStatus::Released && !self.stale
    }
}

/// System-wide release module kinds, in document order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SystemDocumentKind {
    SafetyPlan,
    ItemDefinition,
    HazardAnalysisRiskAssessment,
    FunctionalSafetyConcept,
    TechnicalSafetyConcept,
    SafetyCase,
    OperatingInstructions,
}

impl SystemDocumentKind {
    pub const ALL: [SystemDocumentKind; 7] = [
        SystemDocumentKind::SafetyPlan,
        SystemDocumentKind::ItemDefinition,
        SystemDocumentKind::HazardAnalysisRiskAssessment,
        SystemDocumentKind::FunctionalSafetyConcept,
        SystemDocumentKind::TechnicalSafetyConcept,
        SystemDocumentKind::SafetyCase,
        SystemDocumentKind::OperatingInstructions,
    ];

    pub fn title(self) -> &'static str {
        match self {
            SystemDocumentKind::SafetyPlan => "Safety Plan",
            SystemDocumentKind::ItemDefinition => "Item Definition",
            SystemDocumentKind::HazardAnalysisRiskAssessment => "Hazard Analysis and Risk Assessment",
            SystemDocumentKind::FunctionalSafetyConcept => "Functional Safety Concept",
            SystemDocumentKind::TechnicalSafetyConcept => "Technical Safety Concept",
            SystemDocumentKind::SafetyCase => "Safety Case",
            SystemDocumentKind::OperatingInstructions => "Operating Instructions",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DocumentStatus {
    Draft,
    Issued,
}

/// Named subsection of a system-wide document (e.g. procedures, roles).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentSection {
    pub title: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemWideDocument {
    pub id: RecordId,
    pub prototype: RecordId,
    pub kind: SystemDocumentKind,
    pub content: String,
    #[serde(default)]
    pub sections: Vec<DocumentSection>,
    pub status: DocumentStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Recommendation {
    For,
    Against,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReviewRecord {
    pub id: RecordId,
    pub prototype: RecordId,
    pub stage: StageNumber,
    pub recommendation: Recommendation,
    pub notes: String,
    pub reviewer: ActorId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecisionVerdict {
    Granted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReleaseDecision {
    pub id: RecordId,
    pub prototype: RecordId,
    pub stage: StageNumber,
    pub verdict: DecisionVerdict,
    pub conditions: String,
    pub decided_by: ActorId,
}

/// Any record that lives in its own file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Record {
    Actor(Actor),
    Prototype(Prototype),
    Scenario(OperationalScenario),
    Malfunction(Malfunction),
    Hazard(Hazard),
    HazardousScenario(HazardousScenario),
    SafetyGoal(SafetyGoal),
    Requirement(SafetyRequirement),
    Component(Component),
    ComponentRelease(ComponentReleaseDocument),
    SystemDocument(SystemWideDocument),
    Review(ReviewRecord),
    Decision(ReleaseDecision),
}

impl Record {
    /// Display label of the record's identity.
    pub fn label(&self) -> String {
        match self {
            Record::Actor(a) => a.id.to_string(),
            Record::Prototype(r) => r.id.to_string(),
            Record::Scenario(r) => r.id.to_string(),
            Record::Malfunction(r) => r.id.to_string(),
            Record::Hazard(r) => r.id.to_string(),
            Record::HazardousScenario(r) => r.id.to_string(),
            Record::SafetyGoal(r) => r.id.to_string(),
            Record::Requirement(r) => r.id.to_string(),
            Record::Component(r) => r.id.to_string(),
            Record::ComponentRelease(r) => r.id.to_string(),
            Record::SystemDocument(r) => r.id.to_string(),
            Record::Review(r) => r.id.to_string(),
            Record::Decision(r) => r.id.to_string(),
        }
    }

    /// Kind expected for the record's id, `None` for actors.
    pub fn expected_kinds(&self) -> &'static [RecordKind] {
        match self {
            Record::Actor(_) => &[],
            Record::Prototype(_) => &[RecordKind::Prototype],
            Record::Scenario(_) => &[RecordKind::OperationalScenario],
            Record::Malfunction(_) => &[RecordKind::Malfunction],
            Record::Hazard(_) => &[RecordKind::Hazard],
            Record::HazardousScenario(_) => &[RecordKind::HazardousScenario],
            Record::SafetyGoal(_) => &[RecordKind::SafetyGoal],
            Record::Requirement(_) => &[RecordKind::FunctionalRequirement, RecordKind::TechnicalRequirement],
            Record::Component(_) => &[RecordKind::Component],
            Record::ComponentRelease(_) => &[RecordKind::ComponentRelease],
            Record::SystemDocument(_) => &[RecordKind::SystemDocument],
            Record::Review(_) => &[RecordKind::Review],
            Record::Decision(_) => &[RecordKind::Decision],
        }
    }
}

/// Release modules required for one prototype at one stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageComposition {
    pub prototype: RecordId,
    pub stage: StageNumber,
    pub required_system_docs: BTreeSet<SystemDocumentKind>,
    pub required_component_modules: BTreeSet<RecordId>,
}
