//! Risk classification: S/E/C classes -> ASIL -> RSIL, and hazardous
//! scenario derivation from operational scenarios x malfunctions.
//!
//!     cargo run --example classify_risk            # full table
//!     cargo run --example classify_risk -- 3 4 2   # one assessment

use release_gate::model::*;
use release_gate::risk::{asil_from_sec, derive_hazardous_scenarios, rsil_from_asil};

fn main() {
    let args: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    if let [s, e, c] = args[..] {
        let params = RiskParameters::new(s, e, c);
        match asil_from_sec(&params) {
            Ok(asil) => {
                let rsil = rsil_from_asil(asil);
                println!("{params} -> {asil} -> {rsil} ({})", rsil.band());
            }
            Err(err) => {
                eprintln!("{err}");
                std::process::exit(2);
            }
        }
        return;
    }

    println!("{:<4} {:<8} {:<8} {:<8}", "", "C1", "C2", "C3");
    for s in 1..=3 {
        for e in 1..=4 {
            let row: Vec<String> = (1..=3)
                .map(|c| rsil_from_asil(asil_from_sec(&RiskParameters::new(s, e, c)).unwrap()).to_string())
                .collect();
            println!("S{s}E{e} {}", row.iter().map(|r| format!(" {r:<8}")).collect::<String>());
        }
    }
    println!();
    for r in Rsil::all() {
        println!("{r}: {}", r.band());
    }

    let scenarios = vec![
        OperationalScenario {
            id: rid("OS-0001"),
            kind: ScenarioKind::VehicleDynamic,
            description: "urban drive".into(),
        },
        OperationalScenario {
            id: rid("OS-0002"),
            kind: ScenarioKind::Boarding,
            description: "boarding at a stop".into(),
        },
    ];
    let malfunctions = vec![
        Malfunction { id: rid("MF-0001"), component: rid("CMP-0001"), description: "missed object".into() },
        Malfunction { id: rid("MF-0002"), component: rid("CMP-0004"), description: "lift deploys while moving".into() },
    ];
    // boarding scenarios only pair with lift malfunctions and vice versa
    let relevant = |os: &OperationalScenario, mf: &Malfunction| {
        (os.kind == ScenarioKind::Boarding) == (mf.component == rid("CMP-0004"))
    };
    println!();
    for hs in derive_hazardous_scenarios(&scenarios, &malfunctions, relevant, 1) {
        println!("{}: {} x {}", hs.id, hs.scenario, hs.malfunction);
    }
}
