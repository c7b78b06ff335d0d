//! Readiness of the family vehicle for stage 5, just before the committee
//! decides: pristine, then with one seeded defect per issue category.

use release_gate::fixture::{self, FAMILY, LIFT, LIFT_RELEASE};
use release_gate::model::*;
use release_gate::validation::readiness_report;
use release_gate::workflow::{mark_stale, replay};
use release_gate::Repository;

fn report(label: &str, repo: &Repository) {
    let state = replay(&repo.journal, repo).expect("journal replays");
    let r = readiness_report(repo, &state, &rid(FAMILY), StageNumber::LAST).expect("composition exists");
    println!("== {label}");
    print!("{}", r.to_text());
}

fn main() {
    let mut pristine = fixture::unicaragil();
    // stop short of the stage-5 decision
    pristine.journal.truncate(24);
    report("pristine", &pristine);

    let mut repo = pristine.clone();
    repo.component_releases.remove(&rid(LIFT_RELEASE));
    report("lift release document deleted", &repo);

    let mut repo = pristine.clone();
    repo.component_releases.get_mut(&rid("CRD-0003")).unwrap().covered_requirements.retain(|r| *r != rid("TSR-0004"));
    report("interlock requirement dropped from motion control", &repo);

    let mut repo = pristine.clone();
    let hz = repo.hazards.get_mut(&rid("HZ-0002")).unwrap();
    hz.mitigation_status = MitigationStatus::MeasuresImplemented;
    for m in &mut hz.measures {
        m.status = MeasureStatus::Implemented;
    }
    report("acceleration hazard only implemented", &repo);

    let mut repo = pristine.clone();
    repo.component_releases.get_mut(&rid(LIFT_RELEASE)).unwrap().known_limitations.clear();
    report("lift limitations left empty", &repo);

    let mut repo = pristine.clone();
    repo.reviews.remove(&rid("RVW-0005"));
    report("stage-5 review missing", &repo);

    report("lift modified after release", &mark_stale(&pristine, &rid(LIFT)));

    let mut repo = pristine.clone();
    repo.hazards.get_mut(&rid("HZ-0001")).unwrap().measures[1].verified_by.clear();
    report("marshal measure without test evidence", &repo);
}
