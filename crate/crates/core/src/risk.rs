//! Hazard derivation and risk classification.
//!
//! Hazardous scenarios come from coupling operational scenarios with
//! component malfunctions. Each is assessed with severity, exposure and
//! controllability classes; the ASIL follows from those classes and the
//! RSIL from the ASIL.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::hazard_rsil;
use crate::model::{
    AsilLevel, ClassRangeError, HazardousScenario, Malfunction, MitigationStatus, OperationalScenario, RecordId,
    RecordKind, RiskAssessment, RiskParameters, Rsil,
};
use crate::repository::{IntegrityError, Repository};

/// ASIL for a set of risk classes.
///
/// Any class 0 yields QM. Otherwise the level is `S + E + C - 6`, where
/// values of zero or below are QM and 1..=4 map to A..=D. This reproduces
/// the standard determination table cell for cell.
pub fn asil_from_sec(params: &RiskParameters) -> Result<AsilLevel, ClassRangeError> {
    params.check_ranges()?;
    let RiskParameters { severity, exposure, controllability } = *params;
    if severity == 0 || exposure == 0 || controllability == 0 {
        return Ok(AsilLevel::QM);
    }
    let score = severity as i32 + exposure as i32 + controllability as i32 - 6;
    Ok(match score {
        i32::MIN..=0 => AsilLevel::QM,
        1 => AsilLevel::A,
        2 => AsilLevel::B,
        3 => AsilLevel::C,
        _ => AsilLevel::D,
    })
}

pub fn rsil_from_asil(asil: AsilLevel) -> Rsil {
    let level = match asil {
        AsilLevel::QM => 0,
        AsilLevel::A => 1,
        AsilLevel::B => 2,
        AsilLevel::C => 3,
        AsilLevel::D => 4,
    };
    Rsil::new(level).expect("mapping stays in range")
}

/// Inverse of [`rsil_from_asil`].
pub fn asil_reference(rsil: Rsil) -> AsilLevel {
    AsilLevel::ALL[rsil.level() as usize]
}

/// Relevance predicate that keeps every pairing.
pub fn all_pairs(_: &OperationalScenario, _: &Malfunction) -> bool {
    true
}

/// Couples every relevant (scenario, malfunction) pair into an unassessed draft.
///
/// Drafts are numbered from `first_serial` in scenario-id, then
/// malfunction-id order, independent of the input order.
pub fn derive_hazardous_scenarios<F>(
    scenarios: &[OperationalScenario],
    malfunctions: &[Malfunction],
    relevance: F,
    first_serial: u32,
) -> Vec<HazardousScenario>
where
    F: Fn(&OperationalScenario, &Malfunction) -> bool,
{
    let mut scenarios: Vec<&OperationalScenario> = scenarios.iter().collect();
    scenarios.sort_by_key(|s| s.id);
    let mut malfunctions: Vec<&Malfunction> = malfunctions.iter().collect();
    malfunctions.sort_by_key(|m| m.id);

    let mut serial = first_serial;
    let mut drafts = Vec::new();
    for s in &scenarios {
        for m in &malfunctions {
            if !relevance(s, m) {
                continue;
            }
            let id =
                RecordId::new(RecordKind::HazardousScenario, serial).expect("hazardous scenario serials exhausted");
            serial += 1;
            drafts.push(HazardousScenario { id, scenario: s.id, malfunction: m.id, hazard: None, assessment: None });
        }
    }
    drafts
}

/// Fills (or replaces) the assessment of a hazardous scenario.
pub fn classify(hs: &HazardousScenario, params: RiskParameters) -> Result<HazardousScenario, ClassRangeError> {
    let asil = asil_from_sec(&params)?;
    Ok(HazardousScenario {
        assessment: Some(RiskAssessment { parameters: params, asil, rsil: rsil_from_asil(asil) }),
        ..hs.clone()
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HazardLogEntry {
    pub hazard: RecordId,
    pub description: String,
    pub rsil: Rsil,
    pub mitigation_status: MitigationStatus,
    pub scenarios: Vec<RecordId>,
}

/// Counts over the hazard log plus the hazards still needing work.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HazardLogSummary {
    pub total: usize,
    /// Index = RSIL level.
    pub per_rsil: [usize; 5],
    pub per_status: BTreeMap<MitigationStatus, usize>,
    /// Hazards with RSIL >= 1 that are not yet at `MeasuresTested`.
    pub unresolved: Vec<HazardLogEntry>,
}

/// One row per hazard, RSIL taken as the maximum over its scenarios.
pub fn hazard_log(repo: &Repository) -> Result<Vec<HazardLogEntry>, IntegrityError> {
    let offenders: Vec<_> = repo
        .dangling_references()
        .into_iter()
        .filter(|d| d.from.starts_with("HS-") || d.from.starts_with("SG-"))
        .collect();
    if !offenders.is_empty() {
        return Err(IntegrityError { offenders });
    }
    Ok(repo
        .hazards
        .values()
        .map(|h| HazardLogEntry {
            hazard: h.id,
            description: h.description.clone(),
            rsil: hazard_rsil(repo, &h.id),
            mitigation_status: h.mitigation_status,
            scenarios: repo.scenarios_of_hazard(&h.id).map(|hs| hs.id).collect(),
        })
        .collect())
}

pub fn hazard_log_summary(repo: &Repository) -> Result<HazardLogSummary, IntegrityError> {
    let entries = hazard_log(repo)?;
    let mut per_rsil = [0usize; 5];
    let mut per_status: BTreeMap<MitigationStatus, usize> = MitigationStatus::ALL.iter().map(|s| (*s, 0)).collect();
    for e in &entries {
        per_rsil[e.rsil.level() as usize] += 1;
        *per_status.entry(e.mitigation_status).or_default() += 1;
    }
    let unresolved = entries
        .iter()
        .filter(|e| e.rsil.requires_measures() && e.mitigation_status != MitigationStatus::MeasuresTested)
        .cloned()
        .collect();
    Ok(HazardLogSummary { total: entries.len(), per_rsil, per_status, unresolved })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rid, Hazard, ScenarioKind};

    fn p(s: u8, e: u8, c: u8) -> RiskParameters {
        RiskParameters::new(s, e, c)
    }

    #[test]
    fn worked_examples() {
        assert_eq!(asil_from_sec(&p(3, 4, 3)).unwrap(), AsilLevel::D);
        assert_eq!(asil_from_sec(&p(0, 4, 3)).unwrap(), AsilLevel::QM);
        assert_eq!(asil_from_sec(&p(1, 4, 3)).unwrap(), AsilLevel::B);
        assert_eq!(asil_from_sec(&p(2, 4, 3)).unwrap(), AsilLevel::C);
    }

    #[test]
    fn out_of_range_names_parameter() {
        let err = asil_from_sec(&p(1, 1, 4)).unwrap_err();
        assert_eq!(err.parameter, "controllability");
        assert!(err.to_string().contains("controllability"));
    }

    #[test]
    fn rsil_table() {
        assert_eq!(rsil_from_asil(AsilLevel::QM).level(), 0);
        assert_eq!(rsil_from_asil(AsilLevel::A).level(), 1);
        assert_eq!(rsil_from_asil(AsilLevel::D).level(), 4);
        for rsil in Rsil::all() {
            assert_eq!(rsil_from_asil(asil_reference(rsil)), rsil);
        }
    }

    fn scenario(serial: u32, kind: ScenarioKind) -> OperationalScenario {
        OperationalScenario {
            id: RecordId::new(RecordKind::OperationalScenario, serial).unwrap(),
            kind,
            description: format!("scenario {serial}"),
        }
    }

    fn malfunction(serial: u32, component: &str) -> Malfunction {
        Malfunction {
            id: RecordId::new(RecordKind::Malfunction, serial).unwrap(),
            component: rid(component),
            description: format!("malfunction {serial}"),
        }
    }

    #[test]
    fn cartesian_coupling() {
        let os = vec![scenario(2, ScenarioKind::VehicleDynamic), scenario(1, ScenarioKind::Boarding)];
        let mf = vec![malfunction(3, "CMP-0001"), malfunction(1, "CMP-0001"), malfunction(2, "CMP-0002")];
        let drafts = derive_hazardous_scenarios(&os, &mf, all_pairs, 1);
        assert_eq!(drafts.len(), 6);
        let order: Vec<(String, String)> =
            drafts.iter().map(|d| (d.scenario.to_string(), d.malfunction.to_string())).collect();
        assert_eq!(order[0], ("OS-0001".into(), "MF-0001".into()));
        assert_eq!(order[5], ("OS-0002".into(), "MF-0003".into()));
        assert_eq!(drafts[5].id, rid("HS-0006"));
        assert!(drafts.iter().all(|d| d.assessment.is_none() && d.hazard.is_none()));

        assert!(derive_hazardous_scenarios(&os, &[], all_pairs, 1).is_empty());
    }

    #[test]
    fn boarding_pairs_only_with_lift() {
        let lift = "CMP-0004";
        let os: Vec<_> = (1..=3)
            .map(|i| scenario(i, ScenarioKind::Boarding))
            .chain((4..=5).map(|i| scenario(i, ScenarioKind::VehicleDynamic)))
            .collect();
        let mf = vec![malfunction(1, lift), malfunction(2, lift), malfunction(3, "CMP-0003")];
        let drafts = derive_hazardous_scenarios(
            &os,
            &mf,
            |s, m| (s.kind == ScenarioKind::Boarding) == (m.component == rid(lift)),
            10,
        );
        // 3 boarding x 2 lift + 2 dynamic x 1 motion
        let boarding: Vec<_> = drafts
            .iter()
            .filter(|d| os.iter().find(|s| s.id == d.scenario).unwrap().kind == ScenarioKind::Boarding)
            .collect();
        assert_eq!(boarding.len(), 6);
        assert!(boarding.iter().all(|d| d.malfunction != rid("MF-0003")));
        assert_eq!(drafts.len(), 8);
        assert_eq!(drafts[0].id, rid("HS-0010"));
    }

    #[test]
    fn classify_examples() {
        let draft = HazardousScenario {
            id: rid("HS-0001"),
            scenario: rid("OS-0001"),
            malfunction: rid("MF-0001"),
            hazard: None,
            assessment: None,
        };
        let hs = classify(&draft, p(3, 4, 3)).unwrap();
        assert_eq!(hs.assessment.unwrap().rsil.level(), 4);
        assert_eq!(classify(&draft, p(1, 1, 1)).unwrap().assessment.unwrap().rsil.level(), 0);
        assert_eq!(classify(&draft, p(0, 1, 1)).unwrap().assessment.unwrap().rsil.level(), 0);
        // re-classification replaces the earlier assessment
        let again = classify(&hs, p(1, 1, 1)).unwrap();
        assert_eq!(again.assessment.unwrap().asil, AsilLevel::QM);
        assert_eq!(classify(&again, p(1, 1, 1)).unwrap(), again);
        assert!(classify(&draft, p(4, 1, 1)).is_err());
    }

    fn small_log_repo() -> Repository {
        let mut repo = Repository::new("mem");
        repo.scenarios.insert(rid("OS-0001"), scenario(1, ScenarioKind::VehicleDynamic));
        repo.malfunctions.insert(rid("MF-0001"), malfunction(1, "CMP-0001"));
        let statuses = [MitigationStatus::MeasuresTested, MitigationStatus::MeasuresDefined, MitigationStatus::Open];
        // RSIL 0, 2, 4
        let params = [p(1, 1, 1), p(2, 4, 2), p(3, 4, 3)];
        for (i, (status, params)) in statuses.iter().zip(params).enumerate() {
            let hz = RecordId::new(RecordKind::Hazard, i as u32 + 1).unwrap();
            repo.hazards.insert(
                hz,
                Hazard { id: hz, description: format!("hazard {i}"), mitigation_status: *status, measures: vec![] },
            );
            let mut hs = classify(
                &HazardousScenario {
                    id: RecordId::new(RecordKind::HazardousScenario, i as u32 + 1).unwrap(),
                    scenario: rid("OS-0001"),
                    malfunction: rid("MF-0001"),
                    hazard: Some(hz),
                    assessment: None,
                },
                params,
            )
            .unwrap();
            hs.hazard = Some(hz);
            repo.hazardous_scenarios.insert(hs.id, hs);
        }
        repo
    }

    #[test]
    fn summary_lists_unresolved_hazards() {
        let repo = small_log_repo();
        let s = hazard_log_summary(&repo).unwrap();
        assert_eq!(s.total, 3);
        assert_eq!(s.per_rsil, [1, 0, 1, 0, 1]);
        let unresolved: Vec<String> = s.unresolved.iter().map(|e| e.hazard.to_string()).collect();
        assert_eq!(unresolved, vec!["HZ-0002", "HZ-0003"]);
        assert_eq!(s.per_status.values().sum::<usize>(), 3);
    }

    #[test]
    fn empty_repo_summary_is_zero() {
        let s = hazard_log_summary(&Repository::new("mem")).unwrap();
        assert_eq!(s.total, 0);
        assert_eq!(s.per_rsil, [0; 5]);
        assert!(s.per_status.values().all(|c| *c == 0));
        assert!(s.unresolved.is_empty());
    }

    #[test]
    fn hazard_counted_once_at_max_rsil() {
        let mut repo = small_log_repo();
        // attach a second, RSIL-1 scenario and a third, RSIL-3 one to HZ-0001 (RSIL 0 so far)
        for (serial, params) in [(10, p(1, 4, 2)), (11, p(3, 3, 3))] {
            let mut hs = classify(
                &HazardousScenario {
                    id: RecordId::new(RecordKind::HazardousScenario, serial).unwrap(),
                    scenario: rid("OS-0001"),
                    malfunction: rid("MF-0001"),
                    hazard: Some(rid("HZ-0001")),
                    assessment: None,
                },
                params,
            )
            .unwrap();
            hs.hazard = Some(rid("HZ-0001"));
            repo.hazardous_scenarios.insert(hs.id, hs);
        }
        let log = hazard_log(&repo).unwrap();
        assert_eq!(log[0].rsil.level(), 3);
        let s = hazard_log_summary(&repo).unwrap();
        assert_eq!(s.total, 3);
        assert_eq!(s.per_rsil, [0, 0, 1, 1, 1]);
    }

    #[test]
    fn dangling_hazard_link_is_integrity_error() {
        let mut repo = small_log_repo();
        repo.hazardous_scenarios.get_mut(&rid("HS-0001")).unwrap().hazard = Some(rid("HZ-0042"));
        let err = hazard_log_summary(&repo).unwrap_err();
        assert_eq!(err.offenders.len(), 1);
        assert!(err.to_string().contains("HZ-0042"));
        assert!(err.to_string().contains("HS-0001"));
    }
}
