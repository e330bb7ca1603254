//! Per-group statistics over the final errors and their rendering.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ndcg::{NdcgRow, WorkingExampleOutcome};
use super::run::{csv_error, write_atomic, Failure, Manifest, RunRecord};
use super::Campaign;
use crate::error::Result;
use crate::metrics::{a12, mean, median, quantile, scott_knott, wilcoxon_signed_rank, Magnitude, RankedGroup};

/// Comparison of label `a` against label `b` within a group. Values are
/// paired by replication index; `a12` is the probability that `a` attains
/// the smaller error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairStat {
    pub group: String,
    pub a: String,
    pub b: String,
    pub pairs: usize,
    pub p_value: f64,
    pub a12: f64,
    pub magnitude: Magnitude,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelSummary {
    pub label: String,
    pub runs: usize,
    pub median: f64,
    pub iqr: f64,
    pub mean: f64,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub labels: Vec<LabelSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRanking {
    pub group: String,
    pub clusters: Vec<RankedGroup>,
}

/// How often a label received each Scott–Knott rank across groups;
/// `counts[r - 1]` is the number of groups ranking it `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankDistribution {
    pub label: String,
    pub counts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub name: String,
    pub config_hash: String,
    pub groups: Vec<GroupSummary>,
    pub pairs: Vec<PairStat>,
    pub rankings: Vec<GroupRanking>,
    pub rank_distribution: Vec<RankDistribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ndcg: Option<Vec<NdcgRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub working_example: Option<WorkingExampleOutcome>,
    pub failures: Vec<Failure>,
}

fn first_appearance(items: impl Iterator<Item = String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in items {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

pub(crate) fn build(
    campaign: &Campaign,
    manifest: &Manifest,
    records: &[RunRecord],
    ndcg: Option<Vec<NdcgRow>>,
    working_example: Option<WorkingExampleOutcome>,
) -> Result<CampaignReport> {
    let groups = first_appearance(campaign.cells.iter().map(|c| c.group()));
    let all_labels = first_appearance(campaign.cells.iter().map(|c| c.label()));
    let mut summaries = Vec::new();
    let mut pairs = Vec::new();
    let mut rankings = Vec::new();
    for group in &groups {
        let labels = first_appearance(campaign.cells.iter().filter(|c| &c.group() == group).map(|c| c.label()));
        let values = |label: &str| -> Vec<&RunRecord> {
            records
                .iter()
                .filter(|r| &r.group == group && r.label == label)
                .collect()
        };
        let samples: Vec<(String, Vec<f64>)> = labels
            .iter()
            .map(|l| (l.clone(), values(l).iter().map(|r| r.error).collect::<Vec<f64>>()))
            .filter(|(_, v)| !v.is_empty())
            .collect();
        if samples.is_empty() {
            continue;
        }
        let clusters = scott_knott(&samples)?;
        let rank_of = |label: &str| clusters.iter().find(|c| c.label == label).map(|c| c.rank).unwrap_or(0);
        summaries.push(GroupSummary {
            group: group.clone(),
            labels: samples
                .iter()
                .map(|(label, v)| LabelSummary {
                    label: label.clone(),
                    runs: v.len(),
                    median: median(v),
                    iqr: quantile(v, 0.75) - quantile(v, 0.25),
                    mean: mean(v),
                    rank: rank_of(label),
                })
                .collect(),
        });
        for (la, va) in &samples {
            for (lb, vb) in &samples {
                let ra = values(la);
                let rb = values(lb);
                let (xa, xb): (Vec<f64>, Vec<f64>) = ra
                    .iter()
                    .filter_map(|x| {
                        rb.iter()
                            .find(|y| y.replication == x.replication)
                            .map(|y| (x.error, y.error))
                    })
                    .unzip();
                let p_value = if xa.is_empty() {
                    1.0
                } else {
                    wilcoxon_signed_rank(&xa, &xb)?
                };
                let (effect, magnitude) = a12(va, vb)?;
                pairs.push(PairStat {
                    group: group.clone(),
                    a: la.clone(),
                    b: lb.clone(),
                    pairs: xa.len(),
                    p_value,
                    a12: effect,
                    magnitude,
                });
            }
        }
        rankings.push(GroupRanking {
            group: group.clone(),
            clusters,
        });
    }
    let max_rank = rankings
        .iter()
        .flat_map(|g| g.clusters.iter().map(|c| c.rank))
        .max()
        .unwrap_or(0);
    let rank_distribution = all_labels
        .iter()
        .map(|label| {
            let mut counts = vec![0; max_rank];
            for g in &rankings {
                if let Some(c) = g.clusters.iter().find(|c| &c.label == label) {
                    counts[c.rank - 1] += 1;
                }
            }
            RankDistribution {
                label: label.clone(),
                counts,
            }
        })
        .filter(|d| d.counts.iter().any(|&c| c > 0))
        .collect();
    Ok(CampaignReport {
        name: campaign.name.clone(),
        config_hash: manifest.config_hash.clone(),
        groups: summaries,
        pairs,
        rankings,
        rank_distribution,
        ndcg,
        working_example,
        failures: manifest.failures.clone(),
    })
}

#[derive(Serialize)]
struct MetricRow<'a> {
    cell: usize,
    replication: usize,
    seed: u64,
    group: &'a str,
    label: &'a str,
    algorithm: String,
    problem: &'a str,
    error: f64,
    best_psi: f64,
    fe_used: usize,
    generations: usize,
    consultations: usize,
    judgments: usize,
    flipped: usize,
}

#[derive(Serialize)]
struct RankRow<'a> {
    group: &'a str,
    label: &'a str,
    rank: usize,
    mean: f64,
    median: f64,
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))
}

/// metrics.csv, stats.csv, ranks.csv, scott_knott.json, report.json and report.txt.
pub(crate) fn write_tables(dir: &Path, records: &[RunRecord], report: &CampaignReport) -> Result<()> {
    let metrics = csv_bytes(records.iter().map(|r| MetricRow {
        cell: r.cell,
        replication: r.replication,
        seed: r.seed,
        group: &r.group,
        label: &r.label,
        algorithm: r.algorithm.to_string(),
        problem: &r.problem,
        error: r.error,
        best_psi: r.best_psi,
        fe_used: r.fe_used,
        generations: r.generations,
        consultations: r.consultations,
        judgments: r.judgments,
        flipped: r.flipped,
    }))?;
    write_atomic(&dir.join("metrics.csv"), &metrics)?;
    write_atomic(&dir.join("stats.csv"), &csv_bytes(&report.pairs)?)?;
    write_atomic(&dir.join("ranks.csv"), &rank_rows(report)?)?;
    let mut sk = serde_json::to_vec_pretty(&report.rankings)?;
    sk.push(b'\n');
    write_atomic(&dir.join("scott_knott.json"), &sk)?;
    let mut json = serde_json::to_vec_pretty(report)?;
    json.push(b'\n');
    write_atomic(&dir.join("report.json"), &json)?;
    write_atomic(&dir.join("report.txt"), report.render_text().as_bytes())?;
    Ok(())
}

pub(crate) fn rank_rows(report: &CampaignReport) -> Result<Vec<u8>> {
    csv_bytes(report.rankings.iter().flat_map(|g| {
        g.clusters.iter().map(move |c| RankRow {
            group: &g.group,
            label: &c.label,
            rank: c.rank,
            mean: c.mean,
            median: c.median,
        })
    }))
}

impl CampaignReport {
    pub fn group(&self, name: &str) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.group == name)
    }

    pub fn pair(&self, group: &str, a: &str, b: &str) -> Option<&PairStat> {
        self.pairs.iter().find(|p| p.group == group && p.a == a && p.b == b)
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "campaign {} (config {})",
            self.name,
            &self.config_hash[..12.min(self.config_hash.len())]
        );
        for g in &self.groups {
            let _ = writeln!(s, "\n[{}] final error to the golden point", g.group);
            let _ = writeln!(
                s,
                "  {:<16} {:>4} {:>12} {:>12} {:>5}",
                "label", "runs", "median", "iqr", "rank"
            );
            for l in &g.labels {
                let _ = writeln!(
                    s,
                    "  {:<16} {:>4} {:>12.6} {:>12.6} {:>5}",
                    l.label, l.runs, l.median, l.iqr, l.rank
                );
            }
            let pairs: Vec<&PairStat> = self.pairs.iter().filter(|p| p.group == g.group && p.a < p.b).collect();
            if !pairs.is_empty() {
                let _ = writeln!(s, "  pairwise (signed-rank p, A12):");
                for p in pairs {
                    let _ = writeln!(
                        s,
                        "    {} vs {}: p = {:.4}, A12 = {:.3} ({})",
                        p.a,
                        p.b,
                        p.p_value,
                        p.a12,
                        p.magnitude.label()
                    );
                }
            }
        }
        if !self.rank_distribution.is_empty() {
            let _ = writeln!(s, "\nScott–Knott rank distribution (groups per rank)");
            for d in &self.rank_distribution {
                let counts: Vec<String> = d
                    .counts
                    .iter()
                    .enumerate()
                    .map(|(r, c)| format!("r{}={c}", r + 1))
                    .collect();
                let _ = writeln!(s, "  {:<16} {}", d.label, counts.join(" "));
            }
        }
        if let Some(rows) = &self.ndcg {
            let _ = writeln!(s, "\nNDCG");
            for r in rows {
                let _ = writeln!(s, "  m = {:<3} median {:.4}  iqr {:.4}", r.m, r.median, r.iqr);
            }
        }
        if let Some(w) = &self.working_example {
            let _ = writeln!(
                s,
                "\nworking example: {}/{} initializations order all four points correctly",
                w.consistent, w.initializations
            );
        }
        if self.failures.is_empty() {
            let _ = writeln!(s, "\nall replications completed");
        } else {
            let _ = writeln!(s, "\n{} failed replications:", self.failures.len());
            for f in &self.failures {
                let _ = writeln!(
                    s,
                    "  cell {} replication {} (seed {}): {}",
                    f.cell, f.replication, f.seed, f.message
                );
            }
        }
        s
    }
}
