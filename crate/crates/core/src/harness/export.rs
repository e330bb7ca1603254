//! Plot-ready CSV bundles from a stored campaign.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::report::rank_rows;
use super::run::{csv_error, load_result, write_atomic};
use crate::error::{Error, Result};

/// Points sampled from the true front for each population export.
const PF_SAMPLES: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportKind {
    /// Per replication: final nondominated vectors, golden point and a PF sample.
    Population,
    /// Scott–Knott ranks per group and their distribution per label.
    Ranks,
}

impl FromStr for ExportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "population" => Ok(ExportKind::Population),
            "ranks" => Ok(ExportKind::Ranks),
            other => Err(Error::config("kind", format!("unknown export kind {other:?}"))),
        }
    }
}

impl fmt::Display for ExportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExportKind::Population => "population",
            ExportKind::Ranks => "ranks",
        })
    }
}

/// Writes the bundle under `<dir>/export/` and returns the files written.
/// Re-exporting overwrites with identical content.
pub fn export(dir: &Path, kind: ExportKind) -> Result<Vec<PathBuf>> {
    let result = load_result(dir)?;
    let out = dir.join("export");
    fs::create_dir_all(&out)?;
    let mut written = Vec::new();
    match kind {
        ExportKind::Population => {
            let pop_dir = out.join("population");
            fs::create_dir_all(&pop_dir)?;
            for r in &result.records {
                let cell = &result.campaign.cells[r.cell];
                let problem = cell.problem_spec()?;
                let m = problem.m;
                let mut w = csv::Writer::from_writer(Vec::new());
                let mut header: Vec<String> = (1..=m).map(|j| format!("f{j}")).collect();
                header.push("role".into());
                w.write_record(&header).map_err(csv_error)?;
                let mut row = |f: &[f64], role: &str| -> Result<()> {
                    let mut fields: Vec<String> = f.iter().map(|v| v.to_string()).collect();
                    fields.push(role.to_string());
                    w.write_record(&fields).map_err(csv_error)
                };
                for f in &r.front {
                    row(f, "front")?;
                }
                row(&r.golden, "golden")?;
                for f in problem.sample_pf(PF_SAMPLES, 0)? {
                    row(&f, "pf")?;
                }
                let path = pop_dir.join(format!("c{:03}_r{:03}.csv", r.cell, r.replication));
                write_atomic(&path, &w.into_inner().map_err(|e| Error::Io(e.into_error()))?)?;
                written.push(path);
            }
        }
        ExportKind::Ranks => {
            let path = out.join("ranks.csv");
            write_atomic(&path, &rank_rows(&result.report)?)?;
            written.push(path);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["label", "rank", "groups"]).map_err(csv_error)?;
            for d in &result.report.rank_distribution {
                for (r, c) in d.counts.iter().enumerate() {
                    w.write_record([d.label.clone(), (r + 1).to_string(), c.to_string()])
                        .map_err(csv_error)?;
                }
            }
            let path = out.join("rank_distribution.csv");
            write_atomic(&path, &w.into_inner().map_err(|e| Error::Io(e.into_error()))?)?;
            written.push(path);
        }
    }
    Ok(written)
}
