//! Population representation, Pareto dominance, fast non-dominated sorting,
//! crowding distance and the SBX / polynomial-mutation variation operators.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::ObjectiveVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub x: Vec<f64>,
    pub f: ObjectiveVector,
    /// Last score assigned by the preference model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility: Option<f64>,
    /// Index of the non-domination front.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
}

impl Solution {
    pub fn new(x: Vec<f64>, f: ObjectiveVector) -> Self {
        Self {
            x,
            f,
            utility: None,
            rank: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub members: Vec<Solution>,
    pub capacity: usize,
}

impl Population {
    pub fn new(members: Vec<Solution>, capacity: usize) -> Self {
        Self { members, capacity }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn objectives(&self) -> Vec<ObjectiveVector> {
        self.members.iter().map(|s| s.f.clone()).collect()
    }

    /// Writes each member's front index into `rank`.
    pub fn assign_ranks(&mut self) {
        if self.members.is_empty() {
            return;
        }
        let fronts = fast_nondominated_sort(&self.objective_refs());
        for (r, front) in fronts.iter().enumerate() {
            for &i in front {
                self.members[i].rank = Some(r);
            }
        }
    }

    pub(crate) fn objective_refs(&self) -> Vec<&[f64]> {
        self.members.iter().map(|s| s.f.as_slice()).collect()
    }
}

/// `a` Pareto-dominates `b` under minimization.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(dominates_unchecked(a, b))
}

pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Deb's fast non-dominated sort. Fronts list member indices in ascending
/// order; identical vectors are mutually non-dominated and share a front.
pub fn fast_nondominated_sort<V: AsRef<[f64]>>(points: &[V]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (points[i].as_ref(), points[j].as_ref());
            if dominates_unchecked(a, b) {
                dominated_by_me[i].push(j);
                domination_count[j] += 1;
            } else if dominates_unchecked(b, a) {
                dominated_by_me[j].push(i);
                domination_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by_me[i] {
                domination_count[j] -= 1;
                if domination_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of one front (same order as `front`).
pub fn crowding_distance<V: AsRef<[f64]>>(points: &[V], front: &[usize]) -> Vec<f64> {
    let len = front.len();
    let mut distance = vec![0.0; len];
    if len <= 2 {
        return vec![f64::INFINITY; len];
    }
    let m = points[front[0]].as_ref().len();
    let mut order: Vec<usize> = (0..len).collect();
    for k in 0..m {
        let value = |i: usize| points[front[i]].as_ref()[k];
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)));
        let (lo, hi) = (value(order[0]), value(order[len - 1]));
        distance[order[0]] = f64::INFINITY;
        distance[order[len - 1]] = f64::INFINITY;
        if hi - lo <= 0.0 {
            continue;
        }
        for w in 1..len - 1 {
            distance[order[w]] += (value(order[w + 1]) - value(order[w - 1])) / (hi - lo);
        }
    }
    distance
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationConfig {
    pub p_c: f64,
    pub eta_c: f64,
    pub p_m: f64,
    pub eta_m: f64,
}

impl VariationConfig {
    /// p_c = 1.0, η_c = 30, p_m = 1/n, η_m = 20.
    pub fn for_dimension(n: usize) -> Self {
        Self {
            p_c: 1.0,
            eta_c: 30.0,
            p_m: 1.0 / n as f64,
            eta_m: 20.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, p) in [("p_c", self.p_c), ("p_m", self.p_m)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(field, "probability must lie in [0, 1]"));
            }
        }
        for (field, eta) in [("eta_c", self.eta_c), ("eta_m", self.eta_m)] {
            if !(eta > 0.0) {
                return Err(Error::config(field, "distribution index must be positive"));
            }
        }
        Ok(())
    }
}

const SBX_VARIABLE_PROB: f64 = 0.5;

/// Simulated binary crossover. Each variable is recombined with probability
/// 0.5 and the two children are swapped with probability 0.5; results are
/// clamped into `bounds`.
pub fn sbx_crossover<R: Rng + ?Sized>(
    p1: &[f64],
    p2: &[f64],
    cfg: &VariationConfig,
    bounds: &[(f64, f64)],
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    if rng.random::<f64>() >= cfg.p_c {
        return (c1, c2);
    }
    let exponent = 1.0 / (cfg.eta_c + 1.0);
    for i in 0..p1.len() {
        if rng.random::<f64>() >= SBX_VARIABLE_PROB || (p1[i] - p2[i]).abs() < 1e-14 {
            continue;
        }
        let u: f64 = rng.random();
        let beta = if u <= 0.5 {
            (2.0 * u).powf(exponent)
        } else {
            (1.0 / (2.0 * (1.0 - u))).powf(exponent)
        };
        let (lo, hi) = bounds[i];
        let a = (0.5 * ((1.0 + beta) * p1[i] + (1.0 - beta) * p2[i])).clamp(lo, hi);
        let b = (0.5 * ((1.0 - beta) * p1[i] + (1.0 + beta) * p2[i])).clamp(lo, hi);
        if rng.random::<bool>() {
            c1[i] = b;
            c2[i] = a;
        } else {
            c1[i] = a;
            c2[i] = b;
        }
    }
    (c1, c2)
}

/// Bounded polynomial mutation, each variable mutated with probability `p_m`.
pub fn polynomial_mutation<R: Rng + ?Sized>(
    x: &[f64],
    cfg: &VariationConfig,
    bounds: &[(f64, f64)],
    rng: &mut R,
) -> Vec<f64> {
    let mut y = x.to_vec();
    let power = 1.0 / (cfg.eta_m + 1.0);
    for (i, v) in y.iter_mut().enumerate() {
        if rng.random::<f64>() >= cfg.p_m {
            continue;
        }
        let (lo, hi) = bounds[i];
        let span = hi - lo;
        if span <= 0.0 {
            continue;
        }
        let delta1 = (*v - lo) / span;
        let delta2 = (hi - *v) / span;
        let u: f64 = rng.random();
        let deltaq = if u < 0.5 {
            let xy = 1.0 - delta1;
            let val = 2.0 * u + (1.0 - 2.0 * u) * xy.powf(cfg.eta_m + 1.0);
            val.powf(power) - 1.0
        } else {
            let xy = 1.0 - delta2;
            let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy.powf(cfg.eta_m + 1.0);
            1.0 - val.powf(power)
        };
        *v = (*v + deltaq * span).clamp(lo, hi);
    }
    y
}
