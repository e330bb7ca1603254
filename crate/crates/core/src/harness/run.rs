//! Campaign execution and the on-disk layout of its results.
//!
//! ```text
//! <out>/campaign.json        the campaign as executed
//! <out>/manifest.json        config hash, seeds, timestamps, failures
//! <out>/runs/cNNN_rNNN.json  one summary per completed replication
//! <out>/traces/cNNN_rNNN.jsonl
//! <out>/metrics.csv  stats.csv  ranks.csv  scott_knott.json
//! <out>/ndcg.json  ndcg.csv  working_example.json
//! <out>/report.json  report.txt
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::exec::{map_ordered, Execution};
use super::ndcg::{ndcg_study, working_example, NdcgRow, WorkingExampleOutcome};
use super::report::{self, CampaignReport};
use super::Campaign;
use crate::algorithms::{run, Algorithm, Monitor};
use crate::error::{Error, Result};
use crate::oracle::DmOracle;
use crate::seeding;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Wins over `IEMO_OUT` and the campaign's own directory.
    pub output_dir: Option<PathBuf>,
    /// Defaults to the campaign's `parallelism`.
    pub execution: Option<Execution>,
}

/// Summary of one completed replication.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub cell: usize,
    pub replication: usize,
    pub seed: u64,
    pub group: String,
    pub label: String,
    pub algorithm: Algorithm,
    pub problem: String,
    /// Distance from the final population to the golden point.
    pub error: f64,
    pub best_psi: f64,
    pub fe_used: usize,
    pub generations: usize,
    pub consultations: usize,
    pub judgments: usize,
    pub flipped: usize,
    pub golden: Vec<f64>,
    /// Final nondominated objective vectors.
    pub front: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub cell: usize,
    pub replication: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedEntry {
    pub cell: usize,
    pub replication: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub replications: usize,
    pub cells: usize,
    pub seeds: Vec<SeedEntry>,
    pub started_unix: u64,
    #[serde(default)]
    pub finished_unix: Option<u64>,
    #[serde(default)]
    pub failures: Vec<Failure>,
    pub version: String,
}

#[derive(Clone, Debug)]
pub struct CampaignResult {
    pub output_dir: PathBuf,
    pub campaign: Campaign,
    pub manifest: Manifest,
    pub records: Vec<RunRecord>,
    pub report: CampaignReport,
}

impl CampaignResult {
    pub fn failures(&self) -> &[Failure] {
        &self.manifest.failures
    }

    pub fn is_partial(&self) -> bool {
        !self.manifest.failures.is_empty()
    }

    /// Final errors of one cell in replication order.
    pub fn errors_of(&self, cell: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.cell == cell)
            .map(|r| r.error)
            .collect()
    }
}

#[derive(Clone, Copy, Debug)]
struct Job {
    cell: usize,
    replication: usize,
    seed: u64,
}

fn jobs(campaign: &Campaign) -> Vec<Job> {
    (0..campaign.cells.len())
        .flat_map(|cell| {
            (0..campaign.replications).map(move |replication| Job {
                cell,
                replication,
                seed: campaign.replication_seed(cell, replication),
            })
        })
        .collect()
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn run_stem(cell: usize, replication: usize) -> String {
    format!("c{cell:03}_r{replication:03}")
}

/// Writes through a temporary sibling so readers never see partial files.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingResult(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    Ok(serde_json::from_str(&text)?)
}

/// Executes every cell × replication plus the optional studies and writes
/// all tables and reports.
///
/// Replications already present in the output directory are reused, so an
/// interrupted campaign resumes where it stopped; a directory holding a
/// different configuration is refused with [`Error::HashMismatch`]. Failed
/// replications are listed in the manifest and the report while the
/// completed ones are kept.
pub fn run_campaign(campaign: &Campaign, options: &RunOptions) -> Result<CampaignResult> {
    campaign.validate()?;
    let dir = campaign.resolve_output_dir(options.output_dir.as_deref());
    fs::create_dir_all(dir.join("runs"))?;
    fs::create_dir_all(dir.join("traces"))?;
    let hash = campaign.config_hash();
    let manifest_path = dir.join("manifest.json");
    if manifest_path.exists() {
        let previous: Manifest = read_json(&manifest_path)?;
        if previous.config_hash != hash {
            return Err(Error::HashMismatch {
                dir,
                found: previous.config_hash,
                expected: hash,
            });
        }
    }
    let jobs = jobs(campaign);
    let mut manifest = Manifest {
        name: campaign.name.clone(),
        config_hash: hash,
        master_seed: campaign.seed,
        replications: campaign.replications,
        cells: campaign.cells.len(),
        seeds: jobs
            .iter()
            .map(|j| SeedEntry {
                cell: j.cell,
                replication: j.replication,
                seed: j.seed,
            })
            .collect(),
        started_unix: now_unix(),
        finished_unix: None,
        failures: Vec::new(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    write_json(&dir.join("campaign.json"), campaign)?;
    write_json(&manifest_path, &manifest)?;

    let execution = options
        .execution
        .unwrap_or_else(|| Execution::from_workers(campaign.parallelism));
    log::info!("campaign {}: {} replications, {execution:?}", campaign.name, jobs.len());
    let outcomes = map_ordered(&jobs, execution, |job| execute_job(campaign, *job, &dir));
    let mut records = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        match outcome {
            Ok(r) => records.push(r),
            Err(f) => {
                log::warn!("cell {} replication {} failed: {}", f.cell, f.replication, f.message);
                manifest.failures.push(f);
            }
        }
    }

    let ndcg = match &campaign.ndcg {
        Some(study) => {
            let rows = ndcg_study(study, seeding::derive(campaign.seed, &[0x4e]))?;
            write_json(&dir.join("ndcg.json"), &rows)?;
            write_ndcg_csv(&dir.join("ndcg.csv"), &rows)?;
            Some(rows)
        }
        None => None,
    };
    let example = match &campaign.working_example {
        Some(study) => {
            let outcome = working_example(study, seeding::derive(campaign.seed, &[0x57, 0x45]))?;
            write_json(&dir.join("working_example.json"), &outcome)?;
            Some(outcome)
        }
        None => None,
    };

    let report = report::build(campaign, &manifest, &records, ndcg, example)?;
    report::write_tables(&dir, &records, &report)?;
    manifest.finished_unix = Some(now_unix());
    write_json(&manifest_path, &manifest)?;
    Ok(CampaignResult {
        output_dir: dir,
        campaign: campaign.clone(),
        manifest,
        records,
        report,
    })
}

fn execute_job(campaign: &Campaign, job: Job, dir: &Path) -> std::result::Result<RunRecord, Failure> {
    let stem = run_stem(job.cell, job.replication);
    let path = dir.join("runs").join(format!("{stem}.json"));
    if let Ok(existing) = read_json::<RunRecord>(&path) {
        if existing.seed == job.seed {
            log::debug!("{stem}: reusing stored result");
            return Ok(existing);
        }
    }
    let attempt = || -> Result<RunRecord> {
        let cell = &campaign.cells[job.cell];
        let cfg = cell.run_config(job.seed)?;
        let w_star = cell.oracle.weights(cell.m)?;
        let monitor = Monitor::new(&cfg.problem, w_star.clone())?;
        let mut dm = DmOracle::new(w_star, cell.oracle.kappa, seeding::derive(job.seed, &[0x44]))?;
        let result = run(&cfg, &mut dm, Some(&monitor))?;
        if let Some(reason) = &result.aborted {
            return Err(Error::DecisionMaker(reason.clone()));
        }
        let mut trace = Vec::new();
        for t in &result.trajectory {
            serde_json::to_writer(&mut trace, t)?;
            trace.push(b'\n');
        }
        write_atomic(&dir.join("traces").join(format!("{stem}.jsonl")), &trace)?;
        let last = result.trajectory.last().ok_or(Error::Empty("trajectory"))?;
        let record = RunRecord {
            cell: job.cell,
            replication: job.replication,
            seed: job.seed,
            group: cell.group(),
            label: cell.label(),
            algorithm: cell.algorithm,
            problem: cfg.problem.id(),
            error: last.error.unwrap_or(f64::NAN),
            best_psi: last.best_psi.unwrap_or(f64::NAN),
            fe_used: result.fe_used,
            generations: result.generations,
            consultations: result.consultations.len(),
            judgments: result.records().count(),
            flipped: result.consultations.iter().map(|c| c.flipped).sum(),
            golden: monitor.golden.clone(),
            front: result
                .final_population
                .members
                .iter()
                .filter(|s| s.rank == Some(0))
                .map(|s| s.f.clone())
                .collect(),
        };
        write_json(&path, &record)?;
        Ok(record)
    };
    attempt().map_err(|e| Failure {
        cell: job.cell,
        replication: job.replication,
        seed: job.seed,
        message: e.to_string(),
    })
}

fn write_ndcg_csv(path: &Path, rows: &[NdcgRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["m", "replication", "ndcg"]).map_err(csv_error)?;
    for row in rows {
        for (r, v) in row.values.iter().enumerate() {
            w.write_record([row.m.to_string(), r.to_string(), v.to_string()])
                .map_err(csv_error)?;
        }
    }
    write_atomic(path, &w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Unsupported(format!("csv: {other:?}")),
    }
}

/// Reloads a finished (or partially finished) campaign from its directory
/// and rebuilds the report from the stored replications.
pub fn load_result(dir: &Path) -> Result<CampaignResult> {
    let campaign: Campaign = read_json(&dir.join("campaign.json"))?;
    let mut manifest: Manifest = read_json(&dir.join("manifest.json"))?;
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for job in jobs(&campaign) {
        let path = dir
            .join("runs")
            .join(format!("{}.json", run_stem(job.cell, job.replication)));
        match read_json::<RunRecord>(&path) {
            Ok(r) => records.push(r),
            Err(e) => failures.push(
                manifest
                    .failures
                    .iter()
                    .find(|f| f.cell == job.cell && f.replication == job.replication)
                    .cloned()
                    .unwrap_or(Failure {
                        cell: job.cell,
                        replication: job.replication,
                        seed: job.seed,
                        message: e.to_string(),
                    }),
            ),
        }
    }
    manifest.failures = failures;
    let ndcg = optional_json::<Vec<NdcgRow>>(&dir.join("ndcg.json"))?;
    let example = optional_json::<WorkingExampleOutcome>(&dir.join("working_example.json"))?;
    let report = report::build(&campaign, &manifest, &records, ndcg, example)?;
    Ok(CampaignResult {
        output_dir: dir.to_path_buf(),
        campaign,
        manifest,
        records,
        report,
    })
}

fn optional_json<T: DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    match read_json(path) {
        Ok(v) => Ok(Some(v)),
        Err(Error::MissingResult(_)) => Ok(None),
        Err(e) => Err(e),
    }
}
