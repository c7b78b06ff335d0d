//! Reference project with four prototypes sharing a sense-plan-act
//! architecture; the family vehicle (`PRO-0003`) additionally carries a
//! boarding lift. Its journal walks that prototype from stage 1 to stage 5.
//!
//! The same data is checked in under `fixtures/unicaragil/` (see the
//! `write_fixture` example) and is used throughout tests and examples.

use std::collections::BTreeSet;

use crate::model::*;
use crate::repository::{RepoConfig, Repository, SCHEMA_VERSION};
use crate::workflow::{EventKind, EventPayload, WorkflowEvent};

pub const SHUTTLE: &str = "PRO-0001";
pub const TAXI: &str = "PRO-0002";
pub const FAMILY: &str = "PRO-0003";
pub const CARGO: &str = "PRO-0004";

pub const PERCEPTION: &str = "CMP-0001";
pub const PLANNING: &str = "CMP-0002";
pub const MOTION: &str = "CMP-0003";
pub const LIFT: &str = "CMP-0004";

pub const LIFT_RELEASE: &str = "CRD-0004";

fn actor(id: &str, name: &str, role: Role) -> Record {
    Record::Actor(Actor { id: ActorId::new(id), name: name.into(), role })
}

fn test(id: &str, reqs: &[&str], environment: TestEnvironment, stage_context: u8) -> TestRecord {
    TestRecord {
        id: id.into(),
        requirement_refs: reqs.iter().map(|r| rid(r)).collect(),
        environment,
        verdict: TestVerdict::Pass,
        stage_context: stage(stage_context),
    }
}

fn tested(kind: MeasureKind, description: &str, tests: &[&str]) -> Measure {
    Measure {
        kind,
        description: description.into(),
        status: MeasureStatus::Tested,
        verified_by: tests.iter().map(|t| t.to_string()).collect(),
    }
}

/// Records, configuration and the full stage 1..5 journal.
pub fn unicaragil() -> Repository {
    let mut repo = unicaragil_records();
    repo.journal = unicaragil_journal();
    repo
}

/// Records and configuration without any journal.
pub fn unicaragil_records() -> Repository {
    let mut repo = Repository::new("fixtures/unicaragil");
    let mut add = |r: Record| repo.insert(r).expect("fixture ids are unique");

    for r in [
        actor("fd-perception", "Perception developer", Role::FunctionDeveloper),
        actor("fd-planning", "Planning developer", Role::FunctionDeveloper),
        actor("fd-motion", "Motion control developer", Role::FunctionDeveloper),
        actor("fd-lift", "Lift developer", Role::FunctionDeveloper),
        actor("se-lead", "Lead safety engineer", Role::SafetyEngineer),
        actor("ca-auditor", "Certification agency auditor", Role::CertificationAgency),
        actor("rc-chair", "Release committee chair", Role::ReleaseCommittee),
    ] {
        add(r);
    }

    let protos = [
        (SHUTTLE, "autoSHUTTLE", "on-demand public shuttle"),
        (TAXI, "autoTAXI", "automated taxi service"),
        (FAMILY, "autoELF", "autonomous family vehicle with barrier-free boarding"),
        (CARGO, "autoCARGO", "automated parcel delivery"),
    ];
    for (id, name, use_case) in protos {
        let granted: BTreeSet<StageNumber> = if id == FAMILY { StageNumber::all().collect() } else { BTreeSet::new() };
        add(Record::Prototype(Prototype {
            id: rid(id),
            name: name.into(),
            use_case: use_case.into(),
            granted_stages: granted,
        }));
    }

    for (id, kind, description) in [
        ("OS-0001", ScenarioKind::VehicleDynamic, "cruising along the demonstration route with crossing pedestrians"),
        ("OS-0002", ScenarioKind::VehicleDynamic, "approaching a stop with road users nearby"),
        ("OS-0003", ScenarioKind::Boarding, "passenger boarding at a stop via the lift platform"),
    ] {
        add(Record::Scenario(OperationalScenario { id: rid(id), kind, description: description.into() }));
    }

    for (id, component, description) in [
        ("MF-0001", PERCEPTION, "object in the driving corridor not detected"),
        ("MF-0002", PLANNING, "trajectory planned into occupied space"),
        ("MF-0003", MOTION, "unintended acceleration"),
        ("MF-0004", LIFT, "lift platform deploys while the vehicle is moving"),
        ("MF-0005", LIFT, "lift platform fails to deploy"),
    ] {
        add(Record::Malfunction(Malfunction {
            id: rid(id),
            component: rid(component),
            description: description.into(),
        }));
    }

    add(Record::Hazard(Hazard {
        id: rid("HZ-0001"),
        description: "collision with an undetected or mispredicted road user".into(),
        mitigation_status: MitigationStatus::MeasuresTested,
        measures: vec![
            tested(MeasureKind::Technical, "redundant object detection with plausibility check", &["T-PER-01"]),
            tested(MeasureKind::Organizational, "track marshals with radio emergency stop", &["T-PLN-02"]),
        ],
    }));
    add(Record::Hazard(Hazard {
        id: rid("HZ-0002"),
        description: "unintended vehicle motion near a stop".into(),
        mitigation_status: MitigationStatus::MeasuresTested,
        measures: vec![tested(MeasureKind::Technical, "acceleration limiting in motion control", &["T-MOT-01"])],
    }));
    add(Record::Hazard(Hazard {
        id: rid("HZ-0003"),
        description: "passenger struck by a lift platform deployed during motion".into(),
        mitigation_status: MitigationStatus::MeasuresTested,
        measures: vec![tested(MeasureKind::Technical, "drive inhibit while the lift is not stowed", &["T-MOT-02"])],
    }));
    add(Record::Hazard(Hazard {
        id: rid("HZ-0004"),
        description: "passenger unable to board because the lift does not deploy".into(),
        mitigation_status: MitigationStatus::Open,
        measures: vec![],
    }));

    let assessments = [
        ("HS-0001", "OS-0001", "MF-0001", "HZ-0001", RiskParameters::new(3, 4, 3)),
        ("HS-0002", "OS-0002", "MF-0002", "HZ-0001", RiskParameters::new(3, 3, 2)),
        ("HS-0003", "OS-0002", "MF-0003", "HZ-0002", RiskParameters::new(2, 4, 2)),
        ("HS-0004", "OS-0003", "MF-0004", "HZ-0003", RiskParameters::new(3, 4, 2)),
        ("HS-0005", "OS-0003", "MF-0005", "HZ-0004", RiskParameters::new(0, 4, 1)),
    ];
    for (id, os, mf, hz, params) in assessments {
        let draft = HazardousScenario {
            id: rid(id),
            scenario: rid(os),
            malfunction: rid(mf),
            hazard: Some(rid(hz)),
            assessment: None,
        };
        add(Record::HazardousScenario(crate::risk::classify(&draft, params).expect("fixture classes in range")));
    }

    let rsil = |l: u8| Rsil::new(l).unwrap();
    for (id, hz, statement, level) in [
        ("SG-0001", "HZ-0001", "avoid collisions with road users in the driving corridor", 4),
        ("SG-0002", "HZ-0002", "avoid unintended vehicle motion", 2),
        ("SG-0003", "HZ-0003", "never move with a deployed lift platform", 3),
        ("SG-0004", "HZ-0004", "inform the operator when boarding is not possible", 0),
    ] {
        add(Record::SafetyGoal(SafetyGoal {
            id: rid(id),
            hazard: rid(hz),
            statement: statement.into(),
            rsil: rsil(level),
        }));
    }

    let fsr = |id: &str, sg: &str, statement: &str, level: u8| SafetyRequirement {
        id: rid(id),
        kind: RequirementKind::Functional,
        parent: rid(sg),
        statement: statement.into(),
        allocated_to: vec![],
        inherited_rsil: rsil(level),
    };
    let tsr = |id: &str, fsr: &str, statement: &str, component: &str, level: u8| SafetyRequirement {
        id: rid(id),
        kind: RequirementKind::Technical,
        parent: rid(fsr),
        statement: statement.into(),
        allocated_to: vec![rid(component)],
        inherited_rsil: rsil(level),
    };
    for r in [
        fsr("FSR-0001", "SG-0001", "detect road users in the corridor and stop in time", 4),
        fsr("FSR-0002", "SG-0002", "limit longitudinal acceleration near stops", 2),
        fsr("FSR-0003", "SG-0003", "interlock vehicle motion with the lift position", 3),
        fsr("FSR-0004", "SG-0004", "report lift deployment failures", 0),
        tsr("TSR-0001", "FSR-0001", "fuse two independent object detections within 100 ms", PERCEPTION, 4),
        tsr(
            "TSR-0002",
            "FSR-0001",
            "plan only trajectories that keep a safety margin to predicted objects",
            PLANNING,
            4,
        ),
        tsr("TSR-0003", "FSR-0002", "cap commanded acceleration at 1 m/s^2 within 10 m of a stop", MOTION, 2),
        tsr("TSR-0004", "FSR-0003", "inhibit drive torque unless the lift reports stowed", MOTION, 3),
        tsr("TSR-0005", "FSR-0003", "lock the platform whenever vehicle speed is above zero", LIFT, 3),
        tsr("TSR-0006", "FSR-0004", "signal a deployment failure to the operator display", LIFT, 0),
    ] {
        add(Record::Requirement(r));
    }

    let all_protos: BTreeSet<RecordId> = [SHUTTLE, TAXI, FAMILY, CARGO].iter().map(|p| rid(p)).collect();
    for (id, name, dev, role, protos) in [
        (
            PERCEPTION,
            "environment perception",
            "fd-perception",
            Some(ArchitectureRole::EnvironmentPerception),
            all_protos.clone(),
        ),
        (PLANNING, "behavior planning", "fd-planning", Some(ArchitectureRole::BehaviorPlanning), all_protos.clone()),
        (MOTION, "motion control", "fd-motion", Some(ArchitectureRole::MotionControl), all_protos.clone()),
        (LIFT, "boarding assistance (lift)", "fd-lift", None, BTreeSet::from([rid(FAMILY)])),
    ] {
        add(Record::Component(Component {
            id: rid(id),
            name: name.into(),
            developer: ActorId::new(dev),
            prototypes: protos,
            architecture_role: role,
        }));
    }

    let crd = |id: &str,
               component: &str,
               developer: &str,
               texts: [&str; 5],
               hazards: &[&str],
               covered: &[&str],
               tests: Vec<TestRecord>| {
        ComponentReleaseDocument {
            id: rid(id),
            component: rid(component),
            stage: stage(5),
            functions_and_interfaces: texts[0].into(),
            subsystem_boundaries: texts[1].into(),
            fallback_mechanisms: texts[2].into(),
            known_limitations: texts[3].into(),
            hazards_caused: hazards.iter().map(|h| rid(h)).collect(),
            covered_requirements: covered.iter().map(|r| rid(r)).collect(),
            mitigation_strategies: texts[4].into(),
            test_records: tests,
            release_status: ReleaseStatus::Released,
            released_by: Some(ActorId::new(developer)),
            stale: false,
        }
    };
    for c in [
        crd(
            "CRD-0001",
            PERCEPTION,
            "fd-perception",
            [
                "object list from lidar and camera fusion at 20 Hz, published to planning",
                "ends at the fused object list; sensor drivers are part of the platform",
                "degraded mode with a single modality triggers a safe stop",
                "reduced range in heavy rain; no classification of small animals",
                "redundant detection paths with cross-check",
            ],
            &["HZ-0001"],
            &["TSR-0001"],
            vec![
                test("T-PER-01", &["TSR-0001"], TestEnvironment::FaultInjection, 3),
                test("T-PER-02", &["TSR-0001"], TestEnvironment::ClosedCourse, 4),
            ],
        ),
        crd(
            "CRD-0002",
            PLANNING,
            "fd-planning",
            [
                "trajectory generation from object list and route, output to motion control",
                "consumes fused objects; does not command actuators",
                "falls back to a minimal-risk stopping trajectory",
                "no overtaking; predictions limited to 4 s",
                "safety margin inflation around predicted objects",
            ],
            &["HZ-0001"],
            &["TSR-0002"],
            vec![
                test("T-PLN-01", &["TSR-0002"], TestEnvironment::Simulation, 3),
                test("T-PLN-02", &["TSR-0002"], TestEnvironment::DemonstrationScenario, 5),
            ],
        ),
        crd(
            "CRD-0003",
            MOTION,
            "fd-motion",
            [
                "trajectory tracking via steer- and brake-by-wire interfaces",
                "from trajectory input to actuator set-points",
                "independent brake channel holds the vehicle on loss of commands",
                "tracking accuracy degrades above 30 km/h",
                "acceleration limits and lift interlock",
            ],
            &["HZ-0002", "HZ-0003"],
            &["TSR-0003", "TSR-0004"],
            vec![
                test("T-MOT-01", &["TSR-0003"], TestEnvironment::ClosedCourse, 3),
                test("T-MOT-02", &["TSR-0004"], TestEnvironment::FaultInjection, 4),
            ],
        ),
        crd(
            LIFT_RELEASE,
            LIFT,
            "fd-lift",
            [
                "lift platform control with stowed/deployed status to motion control",
                "platform actuator and its controller; vehicle motion is out of scope",
                "mechanical lock holds the platform stowed on power loss",
                "platform load limited to 300 kg; manual deployment needs an operator",
                "speed-dependent platform lock and operator notification",
            ],
            &["HZ-0003", "HZ-0004"],
            &["TSR-0005", "TSR-0006"],
            vec![
                test("T-LFT-01", &["TSR-0005"], TestEnvironment::FaultInjection, 5),
                test("T-LFT-02", &["TSR-0006"], TestEnvironment::DemonstrationScenario, 5),
            ],
        ),
    ] {
        add(Record::ComponentRelease(c));
    }

    for (i, kind) in SystemDocumentKind::ALL.iter().enumerate() {
        let sections = if *kind == SystemDocumentKind::OperatingInstructions {
            vec![
                DocumentSection {
                    title: "Procedures".into(),
                    body: "route check before each run; emergency stop drill; incident reporting within one hour"
                        .into(),
                },
                DocumentSection {
                    title: "Roles".into(),
                    body: "safety driver, track marshals, lift operator, demonstration lead".into(),
                },
            ]
        } else {
            vec![]
        };
        add(Record::SystemDocument(SystemWideDocument {
            id: RecordId::new(RecordKind::SystemDocument, i as u32 + 1).unwrap(),
            prototype: rid(FAMILY),
            kind: *kind,
            content: format!("{} for autoELF demonstration operation.", kind.title()),
            sections,
            status: DocumentStatus::Issued,
        }));
    }

    for s in StageNumber::all() {
        add(Record::Review(ReviewRecord {
            id: RecordId::new(RecordKind::Review, s.get() as u32).unwrap(),
            prototype: rid(FAMILY),
            stage: s,
            recommendation: Recommendation::For,
            notes: format!("safety assurance activities for stage {s} reviewed; no objections"),
            reviewer: ActorId::new("ca-auditor"),
        }));
        add(Record::Decision(ReleaseDecision {
            id: RecordId::new(RecordKind::Decision, s.get() as u32).unwrap(),
            prototype: rid(FAMILY),
            stage: s,
            verdict: DecisionVerdict::Granted,
            conditions: format!("operate within stage {s} conditions only"),
            decided_by: ActorId::new("rc-chair"),
        }));
    }

    repo.config = RepoConfig {
        schema_version: SCHEMA_VERSION,
        stages: StageDefinition::standard_ladder(),
        compositions: standard_compositions(),
    };
    repo
}

/// All seven system documents everywhere; sense-plan-act components from
/// stage 3 on; the lift for the family vehicle's public demonstration.
pub fn standard_compositions() -> Vec<StageComposition> {
    let mut out = Vec::new();
    for proto in [SHUTTLE, TAXI, FAMILY, CARGO] {
        for s in StageNumber::all() {
            let mut components = BTreeSet::new();
            if s.get() >= 3 {
                components.extend([rid(PERCEPTION), rid(PLANNING), rid(MOTION)]);
            }
            if proto == FAMILY && s == StageNumber::LAST {
                components.insert(rid(LIFT));
            }
            out.push(StageComposition {
                prototype: rid(proto),
                stage: s,
                required_system_docs: SystemDocumentKind::ALL.into_iter().collect(),
                required_component_modules: components,
            });
        }
    }
    out
}

/// Timestamp of fixture event `seq`, one hour apart.
pub fn fixture_timestamp(seq: u64) -> String {
    let base = chrono::DateTime::parse_from_rfc3339("2023-03-01T08:00:00Z").expect("valid literal");
    (base + chrono::Duration::hours(seq as i64)).to_utc().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Walk of the family vehicle through stages 1..5 (25 events).
pub fn unicaragil_journal() -> Vec<WorkflowEvent> {
    let family = rid(FAMILY);
    let mut steps: Vec<(&str, EventKind, EventPayload)> = vec![
        ("se-lead", EventKind::InitialAnalysesCompleted, EventPayload::for_prototype(family)),
        ("se-lead", EventKind::PreliminarySafetyConceptIssued, EventPayload::for_prototype(family)),
    ];
    let gate = |s: u8| -> Vec<(&'static str, EventKind, EventPayload)> {
        vec![
            (
                "ca-auditor",
                EventKind::ReviewCompleted,
                EventPayload::for_record(RecordId::new(RecordKind::Review, s as u32).unwrap()),
            ),
            ("se-lead", EventKind::ReleaseDocumentCompiled, EventPayload::for_stage(family, stage(s))),
            (
                "rc-chair",
                EventKind::ReleaseDecided,
                EventPayload::for_record(RecordId::new(RecordKind::Decision, s as u32).unwrap()),
            ),
        ]
    };
    let release = |dev: &'static str, crd: &str| -> Vec<(&'static str, EventKind, EventPayload)> {
        vec![
            (dev, EventKind::ImplementationSubmitted, EventPayload::for_record(rid(crd))),
            (dev, EventKind::ComponentReleaseIssued, EventPayload::for_record(rid(crd))),
        ]
    };
    steps.extend(gate(1));
    steps.extend(gate(2));
    steps.extend(release("fd-perception", "CRD-0001"));
    steps.extend(release("fd-planning", "CRD-0002"));
    steps.extend(release("fd-motion", "CRD-0003"));
    steps.extend(gate(3));
    steps.extend(gate(4));
    steps.extend(release("fd-lift", LIFT_RELEASE));
    steps.extend(gate(5));

    steps
        .into_iter()
        .enumerate()
        .map(|(i, (actor, kind, payload))| {
            let seq = i as u64 + 1;
            WorkflowEvent::new(seq, actor, kind, payload, fixture_timestamp(seq))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validation::readiness_report;
    use crate::workflow::replay;

    #[test]
    fn journal_grants_the_family_vehicle_every_stage() {
        let repo = unicaragil();
        assert_eq!(repo.journal.len(), 25);
        let state = replay(&repo.journal, &repo).unwrap();
        assert_eq!(state.granted(&rid(FAMILY)), StageNumber::all().collect());
        assert!(state.granted(&rid(SHUTTLE)).is_empty());
    }

    #[test]
    fn pristine_fixture_is_ready_everywhere_for_the_family_vehicle() {
        let repo = unicaragil();
        let state = replay(&repo.journal, &repo).unwrap();
        for s in StageNumber::all() {
            let report = readiness_report(&repo, &state, &rid(FAMILY), s).unwrap();
            assert!(report.is_ready(), "stage {s}: {}", report.to_text());
            assert!(report.warnings.is_empty(), "stage {s}: {:?}", report.warnings);
        }
        assert!(repo.check_integrity().is_ok());
        assert!(crate::model::validate_repository(&repo).is_empty());
    }

    #[test]
    fn timestamps_are_hourly() {
        assert_eq!(fixture_timestamp(1), "2023-03-01T09:00:00Z");
    }
}
