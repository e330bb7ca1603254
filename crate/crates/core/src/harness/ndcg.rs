//! Ranking quality of the learned model on synthetic data, and the
//! three-pair working example on DTLZ1 points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ltr::{self, ComparisonRecord, Outcome, TrainConfig};
use crate::metrics::{grades_from_order, median, ndcg_at_k, quantile};
use crate::oracle::{equal_weights, DmOracle};
use crate::seeding;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NdcgStudy {
    pub m_list: Vec<usize>,
    /// Training pairs drawn from the synthetic set.
    pub pairs: usize,
    /// Size of the synthetic set; the model ranks the whole set.
    pub set_size: usize,
    pub k: usize,
    pub replications: usize,
    pub train: TrainConfig,
}

impl Default for NdcgStudy {
    fn default() -> Self {
        Self {
            m_list: vec![2, 3, 5, 8, 10],
            pairs: 50,
            set_size: 20,
            k: 20,
            replications: 31,
            train: TrainConfig::default(),
        }
    }
}

impl NdcgStudy {
    pub fn validate(&self) -> Result<()> {
        if self.m_list.is_empty() {
            return Err(Error::config("ndcg.m_list", "must not be empty"));
        }
        if let Some(m) = self.m_list.iter().find(|m| ![2, 3, 5, 8, 10].contains(*m)) {
            return Err(Error::config(
                "ndcg.m_list",
                format!("{m} is not one of 2, 3, 5, 8, 10"),
            ));
        }
        if self.pairs == 0 {
            return Err(Error::config("ndcg.pairs", "must be positive"));
        }
        if self.set_size < 2 {
            return Err(Error::config("ndcg.set_size", "must be at least 2"));
        }
        if self.k == 0 || self.k > self.set_size {
            return Err(Error::config("ndcg.k", "must lie in [1, set_size]"));
        }
        if self.replications == 0 {
            return Err(Error::config("ndcg.replications", "must be positive"));
        }
        self.train.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NdcgRow {
    pub m: usize,
    pub median: f64,
    pub iqr: f64,
    pub values: Vec<f64>,
}

/// NDCG@k of one replication: `set_size` uniform points in `[0,1]^m`,
/// `pairs` random distinct pairs labelled by the noiseless equal-weight
/// oracle, a freshly trained model, and the model's ranking of the whole
/// set against the oracle's.
pub fn ndcg_replication(study: &NdcgStudy, m: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let set: Vec<Vec<f64>> = (0..study.set_size)
        .map(|_| (0..m).map(|_| rng.random::<f64>()).collect())
        .collect();
    let mut oracle = DmOracle::new(equal_weights(m), None, 0)?;
    let mut records = Vec::with_capacity(study.pairs);
    while records.len() < study.pairs {
        let i = rng.random_range(0..set.len());
        let j = rng.random_range(0..set.len());
        if i == j {
            continue;
        }
        let judgment = oracle.compare(&set[i], &set[j])?;
        records.push(ComparisonRecord::new(set[i].clone(), set[j].clone(), judgment.outcome)?);
    }
    let cfg = TrainConfig {
        init_seed: seeding::derive(seed, &[1]),
        ..study.train.clone()
    };
    let model = ltr::train(&records, m, &cfg)?;

    let psi: Vec<f64> = set.iter().map(|f| oracle.golden_value(f)).collect::<Result<_>>()?;
    let mut truth: Vec<usize> = (0..set.len()).collect();
    truth.sort_by(|&a, &b| psi[a].total_cmp(&psi[b]).then(a.cmp(&b)));
    let scores: Vec<f64> = set.iter().map(|f| model.score(f)).collect::<Result<_>>()?;
    let mut predicted: Vec<usize> = (0..set.len()).collect();
    predicted.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    ndcg_at_k(&predicted, &grades_from_order(&truth), study.k)
}

/// One row per `m`: median and IQR over the replications.
pub fn ndcg_study(study: &NdcgStudy, seed: u64) -> Result<Vec<NdcgRow>> {
    study.validate()?;
    study
        .m_list
        .iter()
        .map(|&m| {
            let values = (0..study.replications)
                .map(|r| ndcg_replication(study, m, seeding::derive(seed, &[m as u64, r as u64])))
                .collect::<Result<Vec<f64>>>()?;
            Ok(NdcgRow {
                m,
                median: median(&values),
                iqr: quantile(&values, 0.75) - quantile(&values, 0.25),
                values,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkingExampleStudy {
    pub initializations: usize,
    pub train: TrainConfig,
}

impl Default for WorkingExampleStudy {
    fn default() -> Self {
        Self {
            initializations: 100,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkingExampleOutcome {
    pub initializations: usize,
    /// Initializations whose scores order the four points as the DM does.
    pub consistent: usize,
    /// Scores of the four points for the first initialization.
    pub first_scores: Vec<f64>,
}

/// Four DTLZ1 points ordered best first by the equal-weight DM.
pub fn working_example_points() -> [Vec<f64>; 4] {
    [
        vec![0.167, 0.167, 0.167],
        vec![0.2, 0.15, 0.15],
        vec![0.3, 0.1, 0.1],
        vec![0.4, 0.05, 0.05],
    ]
}

/// The three judged pairs: 1 over 2, 1 over 3, 2 over 4.
pub fn working_example_records() -> Vec<ComparisonRecord> {
    let x = working_example_points();
    [(0, 1), (0, 2), (1, 3)]
        .iter()
        .map(|&(i, j)| ComparisonRecord::new(x[i].clone(), x[j].clone(), Outcome::Better))
        .collect::<Result<_>>()
        .expect("fixed points share a dimension")
}

/// Trains on the working example from `initializations` seeds derived from
/// `seed` and counts how often the full order is recovered.
pub fn working_example(study: &WorkingExampleStudy, seed: u64) -> Result<WorkingExampleOutcome> {
    if study.initializations == 0 {
        return Err(Error::config("working_example.initializations", "must be positive"));
    }
    let records = working_example_records();
    let points = working_example_points();
    let mut consistent = 0;
    let mut first_scores = Vec::new();
    for i in 0..study.initializations {
        let cfg = TrainConfig {
            init_seed: seeding::derive(seed, &[i as u64]),
            ..study.train.clone()
        };
        let model = ltr::train(&records, 3, &cfg)?;
        let u: Vec<f64> = points.iter().map(|p| model.score(p)).collect::<Result<_>>()?;
        if u.windows(2).all(|w| w[0] > w[1]) {
            consistent += 1;
        }
        if i == 0 {
            first_scores = u;
        }
    }
    Ok(WorkingExampleOutcome {
        initializations: study.initializations,
        consistent,
        first_scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_ranking_scores_one() {
        let truth = vec![3, 0, 2, 1];
        assert_eq!(ndcg_at_k(&truth, &grades_from_order(&truth), 4).unwrap(), 1.0);
    }

    #[test]
    fn rejects_unsupported_objective_counts() {
        let study = NdcgStudy {
            m_list: vec![4],
            ..NdcgStudy::default()
        };
        assert!(study.validate().is_err());
    }

    #[test]
    fn replication_is_deterministic() {
        let study = NdcgStudy {
            replications: 1,
            train: TrainConfig {
                epochs: 50,
                ..TrainConfig::default()
            },
            ..NdcgStudy::default()
        };
        let a = ndcg_replication(&study, 3, 7).unwrap();
        assert_eq!(a, ndcg_replication(&study, 3, 7).unwrap());
        assert!((0.0..=1.0).contains(&a));
    }
}
