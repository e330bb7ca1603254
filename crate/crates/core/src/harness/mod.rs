//! Experiment campaigns: configuration, replication scheduling, persisted
//! traces and tables, statistics and reports.
//!
//! A campaign file is TOML:
//!
//! ```toml
//! name = "dtlz2-pair"
//! seed = 7
//! replications = 11
//! output_dir = "out/dtlz2-pair"   # optional; IEMO_OUT overrides it
//! parallelism = 0                 # worker threads, 0 = all cores, 1 = serial
//!
//! [[cell]]
//! algorithm = "insga2"
//! problem = "dtlz2"
//! m = 3
//! tau = 10                         # optional overrides of the run defaults
//! [cell.oracle]
//! kappa = 200.0                    # omitted = noiseless
//! preferred = 0                    # biased utopia weights; omitted = equal
//!
//! [ndcg]                           # optional ranking-quality study
//! m_list = [2, 10]
//!
//! [working_example]                # optional three-pair training check
//! initializations = 100
//! ```

mod exec;
mod export;
pub mod ndcg;
mod presets;
mod report;
mod run;

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use exec::{map_ordered, Execution};
pub use export::{export, ExportKind};
pub use ndcg::{ndcg_study, working_example, NdcgRow, NdcgStudy, WorkingExampleOutcome, WorkingExampleStudy};
pub use presets::{preset, PRESETS};
pub use report::{CampaignReport, GroupRanking, GroupSummary, LabelSummary, PairStat, RankDistribution};
pub use run::{load_result, run_campaign, CampaignResult, Failure, Manifest, RunOptions, RunRecord};

use crate::algorithms::{Algorithm, RunConfig};
use crate::error::{Error, Result};
use crate::ltr::TrainConfig;
use crate::oracle::{biased_weights, equal_weights};
use crate::problems::{Family, ProblemSpec};

/// Environment variable overriding a campaign's output directory.
pub const OUTPUT_ENV: &str = "IEMO_OUT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Campaign {
    pub name: String,
    /// Master seed; every replication seed derives from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replications: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub parallelism: usize,
    #[serde(default, rename = "cell", skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<CellSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ndcg: Option<NdcgStudy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub working_example: Option<WorkingExampleStudy>,
}

fn one() -> usize {
    1
}

/// One algorithm/problem/DM configuration, replicated `replications` times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    /// Name of the variant compared within its group; defaults to the algorithm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Cells sharing a group are compared statistically; defaults to the instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub algorithm: Algorithm,
    pub problem: Family,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pop_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_fe: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_step: Option<f64>,
    #[serde(default = "yes")]
    pub guidance: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    #[serde(default)]
    pub oracle: OracleSpec,
}

fn yes() -> bool {
    true
}

/// The simulated DM of a cell.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSpec {
    /// Explicit utopia weights; wins over `preferred`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_star: Option<Vec<f64>>,
    /// Objective favoured by biased weights (5 against 1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preferred: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

impl OracleSpec {
    pub fn weights(&self, m: usize) -> Result<Vec<f64>> {
        match (&self.w_star, self.preferred) {
            (Some(w), _) => {
                if w.len() != m {
                    return Err(Error::config("oracle.w_star", format!("needs {m} entries")));
                }
                Ok(w.clone())
            }
            (None, Some(p)) => biased_weights(m, p),
            (None, None) => Ok(equal_weights(m)),
        }
    }
}

impl CellSpec {
    pub fn new(algorithm: Algorithm, problem: Family, m: usize) -> Self {
        Self {
            label: None,
            group: None,
            algorithm,
            problem,
            m,
            n: None,
            pop_size: None,
            max_fe: None,
            tau: None,
            warmup: None,
            mu: None,
            eta_step: None,
            guidance: true,
            train: None,
            oracle: OracleSpec::default(),
        }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.algorithm.to_string())
    }

    pub fn group(&self) -> String {
        if let Some(g) = &self.group {
            return g.clone();
        }
        let mut g = format!("{}-m{}", self.problem, self.m);
        if let Some(p) = self.oracle.preferred {
            g += &format!("-pref{p}");
        }
        if let Some(k) = self.oracle.kappa {
            g += &format!("-k{k}");
        }
        g
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        match self.n {
            Some(n) => ProblemSpec::with_n(self.problem, self.m, n),
            None => ProblemSpec::new(self.problem, self.m),
        }
    }

    /// The run configuration for one replication seed.
    pub fn run_config(&self, seed: u64) -> Result<RunConfig> {
        let mut cfg = RunConfig::new(self.algorithm, self.problem_spec()?);
        if let Some(n) = self.pop_size {
            cfg.pop_size = n;
            cfg.max_fe = 300 * n;
        }
        if let Some(v) = self.max_fe {
            cfg.max_fe = v;
        }
        if let Some(v) = self.tau {
            cfg.tau = v;
        }
        if let Some(v) = self.warmup {
            cfg.warmup = v;
        }
        if let Some(v) = self.mu {
            cfg.mu = v;
        }
        if let Some(v) = self.eta_step {
            cfg.eta_step = v;
        }
        if let Some(t) = &self.train {
            cfg.train = t.clone();
        }
        cfg.guidance = self.guidance;
        cfg.seed = seed;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// The fields that determine a campaign's numbers; output location and
/// worker count are excluded.
#[derive(Serialize)]
struct HashedView<'a> {
    name: &'a str,
    seed: u64,
    replications: usize,
    cells: &'a [CellSpec],
    ndcg: &'a Option<NdcgStudy>,
    working_example: &'a Option<WorkingExampleStudy>,
}

impl Campaign {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: Campaign = toml::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Unsupported(format!("toml serialization: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::config("name", "must not be empty"));
        }
        if self.replications == 0 {
            return Err(Error::config("replications", "must be at least 1"));
        }
        if self.cells.is_empty() && self.ndcg.is_none() && self.working_example.is_none() {
            return Err(Error::config("cell", "campaign has nothing to run"));
        }
        let mut seen = HashSet::new();
        for (i, cell) in self.cells.iter().enumerate() {
            let field = |e: Error| match e {
                Error::InvalidConfig { field, reason } => Error::config(format!("cell[{i}].{field}"), reason),
                other => other,
            };
            cell.run_config(0).map_err(field)?;
            cell.oracle.weights(cell.m).map_err(field)?;
            if let Some(k) = cell.oracle.kappa {
                if !(k > 0.0) {
                    return Err(Error::config(format!("cell[{i}].oracle.kappa"), "must be positive"));
                }
            }
            if !seen.insert((cell.group(), cell.label())) {
                return Err(Error::config(
                    format!("cell[{i}].label"),
                    format!("duplicate label {:?} in group {:?}", cell.label(), cell.group()),
                ));
            }
        }
        if let Some(s) = &self.ndcg {
            s.validate()?;
        }
        Ok(())
    }

    /// Hex SHA-256 of the result-determining configuration.
    pub fn config_hash(&self) -> String {
        let view = HashedView {
            name: &self.name,
            seed: self.seed,
            replications: self.replications,
            cells: &self.cells,
            ndcg: &self.ndcg,
            working_example: &self.working_example,
        };
        let bytes = serde_json::to_vec(&view).expect("campaign view serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Seed of replication `rep` of cell `cell`.
    pub fn replication_seed(&self, cell: usize, rep: usize) -> u64 {
        crate::seeding::derive(self.seed, &[cell as u64, rep as u64])
    }

    /// Explicit override, then `IEMO_OUT`, then the configured directory,
    /// then `runs/<name>`.
    pub fn resolve_output_dir(&self, explicit: Option<&Path>) -> PathBuf {
        if let Some(p) = explicit {
            return p.to_path_buf();
        }
        if let Some(p) = std::env::var_os(OUTPUT_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(p);
        }
        self.output_dir
            .clone()
            .unwrap_or_else(|| Path::new("runs").join(&self.name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
name = "sample"
seed = 7
replications = 2

[[cell]]
algorithm = "insga2"
problem = "dtlz2"
m = 3
tau = 5

[[cell]]
algorithm = "imoead"
problem = "dtlz2"
m = 3
[cell.oracle]
kappa = 50.0
preferred = 1
"#;

    #[test]
    fn parses_and_validates() {
        let c = Campaign::from_toml_str(SAMPLE).unwrap();
        assert_eq!(c.cells.len(), 2);
        assert_eq!(c.cells[0].run_config(3).unwrap().tau, 5);
        assert_eq!(c.cells[1].group(), "dtlz2-m3-pref1-k50");
        assert_eq!(c.cells[1].oracle.weights(3).unwrap(), vec![1.0, 5.0, 1.0]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = SAMPLE.replace("tau = 5", "tua = 5");
        assert!(matches!(Campaign::from_toml_str(&bad), Err(Error::Toml(_))));
    }

    #[test]
    fn invalid_cell_names_the_field() {
        let bad = SAMPLE.replace("tau = 5", "mu = 500");
        match Campaign::from_toml_str(&bad) {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "cell[0].mu"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_labels_in_a_group_are_rejected() {
        let bad = SAMPLE
            .replace("algorithm = \"imoead\"", "algorithm = \"insga2\"")
            .replace("[cell.oracle]\nkappa = 50.0\npreferred = 1\n", "");
        assert!(Campaign::from_toml_str(&bad).is_err());
    }

    #[test]
    fn hash_ignores_output_location_and_workers() {
        let a = Campaign::from_toml_str(SAMPLE).unwrap();
        let mut b = a.clone();
        b.output_dir = Some("elsewhere".into());
        b.parallelism = 4;
        assert_eq!(a.config_hash(), b.config_hash());
        b.seed = 8;
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn toml_round_trip() {
        let a = Campaign::from_toml_str(SAMPLE).unwrap();
        let b = Campaign::from_toml_str(&a.to_toml_string().unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn replication_seeds_are_distinct() {
        let c = Campaign::from_toml_str(SAMPLE).unwrap();
        let seeds: HashSet<u64> = (0..2)
            .flat_map(|i| (0..2).map(move |r| (i, r)))
            .map(|(i, r)| c.replication_seed(i, r))
            .collect();
        assert_eq!(seeds.len(), 4);
    }
}
