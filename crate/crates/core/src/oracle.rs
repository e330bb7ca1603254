//! Decision makers: the simulated Tchebycheff oracle, the abstract
//! interface the algorithms consult, and consultation candidate selection.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::elicitation::utility_truncation_order;
use crate::error::{Error, Result};
use crate::evo::fast_nondominated_sort;
use crate::ltr::Outcome;

/// Golden values closer than this are judged indifferent.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub outcome: Outcome,
    /// Set when noise reversed the true outcome; never shown to the learner.
    pub flipped: bool,
}

impl Judgment {
    pub fn exact(outcome: Outcome) -> Self {
        Self {
            outcome,
            flipped: false,
        }
    }
}

/// One pairwise question put to the decision maker.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub consultation: usize,
    pub generation: usize,
    /// Position in the consultation's canonical pair order.
    pub pair_index: usize,
    pub fi: Vec<f64>,
    pub fj: Vec<f64>,
}

/// Anything that can answer pairwise comparisons: the simulated oracle,
/// a human behind the session service, a replayed log.
pub trait DecisionMaker {
    /// Called once before the queries of a consultation are asked in order.
    fn begin_consultation(&mut self, _queries: &[Query]) -> Result<()> {
        Ok(())
    }

    fn answer(&mut self, query: &Query) -> Result<Judgment>;
}

impl<D: DecisionMaker + ?Sized> DecisionMaker for &mut D {
    fn begin_consultation(&mut self, queries: &[Query]) -> Result<()> {
        (**self).begin_consultation(queries)
    }

    fn answer(&mut self, query: &Query) -> Result<Judgment> {
        (**self).answer(query)
    }
}

impl<D: DecisionMaker + ?Sized> DecisionMaker for Box<D> {
    fn begin_consultation(&mut self, queries: &[Query]) -> Result<()> {
        (**self).begin_consultation(queries)
    }

    fn answer(&mut self, query: &Query) -> Result<Judgment> {
        (**self).answer(query)
    }
}

/// Equal utopia weights.
pub fn equal_weights(m: usize) -> Vec<f64> {
    vec![1.0; m]
}

/// Utopia weights favouring one objective: 5 for `preferred`, 1 elsewhere.
pub fn biased_weights(m: usize, preferred: usize) -> Result<Vec<f64>> {
    if preferred >= m {
        return Err(Error::config("biased_objective", format!("must be below m = {m}")));
    }
    let mut w = vec![1.0; m];
    w[preferred] = 5.0;
    Ok(w)
}

/// Simulated DM judging by `ψ(f) = max_i |f_i - z_i| / w_i` (smaller is better).
#[derive(Clone, Debug)]
pub struct DmOracle {
    w_star: Vec<f64>,
    z_star: Vec<f64>,
    kappa: Option<f64>,
    rng: ChaCha8Rng,
}

impl DmOracle {
    /// `kappa = None` is the noiseless oracle.
    pub fn new(w_star: Vec<f64>, kappa: Option<f64>, seed: u64) -> Result<Self> {
        if w_star.is_empty() || w_star.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::config("w_star", "entries must be positive and finite"));
        }
        if let Some(k) = kappa {
            if !(k > 0.0) {
                return Err(Error::config("kappa", "must be positive"));
            }
        }
        let m = w_star.len();
        Ok(Self {
            w_star,
            z_star: vec![0.0; m],
            kappa,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn with_reference(mut self, z_star: Vec<f64>) -> Result<Self> {
        if z_star.len() != self.w_star.len() {
            return Err(Error::DimensionMismatch {
                expected: self.w_star.len(),
                actual: z_star.len(),
            });
        }
        self.z_star = z_star;
        Ok(self)
    }

    pub fn w_star(&self) -> &[f64] {
        &self.w_star
    }

    pub fn kappa(&self) -> Option<f64> {
        self.kappa
    }

    pub fn golden_value(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.w_star.len() {
            return Err(Error::DimensionMismatch {
                expected: self.w_star.len(),
                actual: f.len(),
            });
        }
        Ok(golden_value_unchecked(f, &self.w_star, &self.z_star))
    }

    pub fn flip_probability(&self, delta: f64) -> f64 {
        match self.kappa {
            Some(k) => (-k * delta.abs()).exp(),
            None => 0.0,
        }
    }

    pub fn compare(&mut self, fi: &[f64], fj: &[f64]) -> Result<Judgment> {
        let gi = self.golden_value(fi)?;
        let gj = self.golden_value(fj)?;
        let delta = gj - gi;
        if delta.abs() <= TIE_TOLERANCE {
            return Ok(Judgment::exact(Outcome::Indifferent));
        }
        let truth = if delta > 0.0 { Outcome::Better } else { Outcome::Worse };
        if self.kappa.is_some() && self.rng.random::<f64>() < self.flip_probability(delta) {
            return Ok(Judgment {
                outcome: truth.reversed(),
                flipped: true,
            });
        }
        Ok(Judgment::exact(truth))
    }
}

impl DecisionMaker for DmOracle {
    fn answer(&mut self, query: &Query) -> Result<Judgment> {
        self.compare(&query.fi, &query.fj)
    }
}

pub(crate) fn golden_value_unchecked(f: &[f64], w: &[f64], z: &[f64]) -> f64 {
    f.iter()
        .zip(w)
        .zip(z)
        .map(|((fi, wi), zi)| (fi - zi).abs() / wi)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Indices of the first occurrence of each distinct objective vector.
fn distinct(objectives: &[&[f64]]) -> Vec<usize> {
    let mut seen = HashSet::new();
    (0..objectives.len())
        .filter(|&i| seen.insert(objectives[i].iter().map(|v| v.to_bits()).collect::<Vec<u64>>()))
        .collect()
}

/// Chooses up to `mu` distinct members to show the DM.
///
/// With utilities, the `mu` highest-utility distinct members in descending
/// order. Without (the first consultation), [`bootstrap_candidates`].
pub fn select_candidates(objectives: &[&[f64]], utilities: Option<&[f64]>, mu: usize) -> Result<Vec<usize>> {
    if mu == 0 {
        return Err(Error::config("mu", "must be at least 1"));
    }
    let Some(u) = utilities else {
        return Ok(bootstrap_candidates(objectives, mu));
    };
    if u.len() != objectives.len() {
        return Err(Error::DimensionMismatch {
            expected: objectives.len(),
            actual: u.len(),
        });
    }
    let mut seen = HashSet::new();
    Ok(utility_truncation_order(u)
        .into_iter()
        .filter(|&i| seen.insert(objectives[i].iter().map(|v| v.to_bits()).collect::<Vec<u64>>()))
        .take(mu)
        .collect())
}

/// Spread selection over the nondominated front.
///
/// Objectives are min/max normalized over the distinct members. The first
/// pick is the front-0 member with the smallest normalized sum; each further
/// pick is the member of the current front farthest (Euclidean) from
/// everything already picked. Later fronts are used only once earlier ones
/// are exhausted. All ties go to the lowest index.
pub fn bootstrap_candidates(objectives: &[&[f64]], mu: usize) -> Vec<usize> {
    let ids = distinct(objectives);
    if ids.is_empty() {
        return Vec::new();
    }
    let m = objectives[ids[0]].len();
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    for &i in &ids {
        for k in 0..m {
            lo[k] = lo[k].min(objectives[i][k]);
            hi[k] = hi[k].max(objectives[i][k]);
        }
    }
    let norm: Vec<Vec<f64>> = ids
        .iter()
        .map(|&i| {
            (0..m)
                .map(|k| {
                    let r = hi[k] - lo[k];
                    if r > 0.0 {
                        (objectives[i][k] - lo[k]) / r
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let fronts = fast_nondominated_sort(&norm);

    let mut picked: Vec<usize> = Vec::new();
    let mut nearest = vec![f64::INFINITY; ids.len()];
    for front in &fronts {
        let mut open: Vec<usize> = front.clone();
        while picked.len() < mu && !open.is_empty() {
            let choice = if picked.is_empty() {
                let sums: Vec<f64> = open.iter().map(|&p| norm[p].iter().sum()).collect();
                (0..open.len())
                    .min_by(|&a, &b| sums[a].total_cmp(&sums[b]).then(open[a].cmp(&open[b])))
                    .unwrap()
            } else {
                (0..open.len())
                    .max_by(|&a, &b| {
                        nearest[open[a]]
                            .total_cmp(&nearest[open[b]])
                            .then(open[b].cmp(&open[a]))
                    })
                    .unwrap()
            };
            let p = open.remove(choice);
            picked.push(p);
            for (q, d) in nearest.iter_mut().enumerate() {
                let dist = norm[q]
                    .iter()
                    .zip(&norm[p])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                *d = d.min(dist);
            }
        }
        if picked.len() >= mu {
            break;
        }
    }
    picked.into_iter().map(|p| ids[p]).collect()
}

/// All pairs `(i, j)` with `i < j` over `count` candidates, lexicographic.
pub fn enumerate_queries(count: usize) -> Result<Vec<(usize, usize)>> {
    if count < 2 {
        return Err(Error::config("candidates", "need at least 2 candidates"));
    }
    Ok((0..count).flat_map(|i| (i + 1..count).map(move |j| (i, j))).collect())
}
