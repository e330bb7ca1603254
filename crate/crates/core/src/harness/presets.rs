//! Named campaigns at desk scale.

use super::ndcg::{NdcgStudy, WorkingExampleStudy};
use super::{Campaign, CellSpec, OracleSpec};
use crate::algorithms::Algorithm;
use crate::error::{Error, Result};
use crate::problems::Family;

pub const PRESETS: [&str; 8] = [
    "smoke",
    "working-example",
    "ndcg-study",
    "sensitivity-tau",
    "sensitivity-mu",
    "sensitivity-eta",
    "noise-study",
    "main-comparison",
];

const DESK_REPLICATIONS: usize = 11;
const NOISE_LEVELS: [f64; 6] = [1.0, 10.0, 30.0, 50.0, 100.0, 200.0];

fn base(name: &str, replications: usize) -> Campaign {
    Campaign {
        name: name.to_string(),
        seed: 0,
        replications,
        output_dir: None,
        parallelism: 0,
        cells: Vec::new(),
        ndcg: None,
        working_example: None,
    }
}

/// One parameter varied on I-MOEA/D (the only instance using all three of
/// τ, μ and η) on DTLZ2 with three objectives.
fn sensitivity(name: &str, parameter: &str) -> Campaign {
    let mut c = base(name, DESK_REPLICATIONS);
    for (v, f) in [(5usize, 0.1f64), (10, 0.2), (20, 0.4)] {
        let mut cell = CellSpec::new(Algorithm::Imoead, Family::Dtlz2, 3);
        cell.group = Some("imoead/dtlz2-m3".to_string());
        match parameter {
            "tau" => {
                cell.tau = Some(v);
                cell.label = Some(format!("tau={v}"));
            }
            "mu" => {
                cell.mu = Some(v);
                cell.label = Some(format!("mu={v}"));
            }
            _ => {
                cell.eta_step = Some(f);
                cell.label = Some(format!("eta={f}"));
            }
        }
        c.cells.push(cell);
    }
    c
}

pub fn preset(name: &str) -> Result<Campaign> {
    let campaign = match name {
        "smoke" => {
            let mut c = base(name, 1);
            c.cells.push(CellSpec::new(Algorithm::Insga2, Family::Dtlz2, 3));
            c
        }
        "working-example" => {
            let mut c = base(name, 1);
            c.working_example = Some(WorkingExampleStudy::default());
            c
        }
        "ndcg-study" => {
            let mut c = base(name, 1);
            c.ndcg = Some(NdcgStudy::default());
            c
        }
        "sensitivity-tau" => sensitivity(name, "tau"),
        "sensitivity-mu" => sensitivity(name, "mu"),
        "sensitivity-eta" => sensitivity(name, "eta"),
        "noise-study" => {
            let mut c = base(name, DESK_REPLICATIONS);
            for algorithm in Algorithm::ALL {
                for problem in [Family::Dtlz2, Family::Mdtlz2] {
                    let kappas = std::iter::once(None).chain(NOISE_LEVELS.iter().map(|&k| Some(k)));
                    for kappa in kappas {
                        let mut cell = CellSpec::new(algorithm, problem, 3);
                        cell.group = Some(format!("{algorithm}/{problem}-m3"));
                        cell.label = Some(match kappa {
                            Some(k) => format!("kappa={k}"),
                            None => "oracle".to_string(),
                        });
                        cell.oracle = OracleSpec {
                            kappa,
                            ..OracleSpec::default()
                        };
                        c.cells.push(cell);
                    }
                }
            }
            c
        }
        "main-comparison" => {
            let mut c = base(name, DESK_REPLICATIONS);
            let mut instances = Vec::new();
            for m in [3, 5] {
                for f in [
                    Family::Dtlz1,
                    Family::Dtlz2,
                    Family::Dtlz3,
                    Family::Dtlz4,
                    Family::Dtlz2Inv,
                    Family::Wfg3,
                ] {
                    instances.push((f, m));
                }
            }
            instances.push((Family::Mdtlz1, 3));
            instances.push((Family::Mdtlz2, 3));
            for (f, m) in instances {
                for algorithm in Algorithm::ALL {
                    c.cells.push(CellSpec::new(algorithm, f, m));
                }
            }
            c
        }
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    campaign.validate()?;
    Ok(campaign)
}
