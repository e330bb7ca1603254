//! Indicator-based EA using the R2 indicator over an adjustable weight set.

use crate::elicitation::{adjust_weights, WeightVector};
use crate::error::{Error, Result};
use crate::evo::{polynomial_mutation, sbx_crossover, Solution};
use crate::ltr::PreferenceModel;

use super::{binary_tournament, ideal_of, tchebycheff, update_ideal, Context, Engine};

/// `(1/|W|) Σ_w min_a max_j w_j |a_j - z_j|`.
pub fn r2_indicator<V: AsRef<[f64]>>(set: &[V], weights: &[WeightVector], z: &[f64]) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::Empty("point set"));
    }
    if weights.is_empty() {
        return Err(Error::Empty("weight set"));
    }
    let total: f64 = weights
        .iter()
        .map(|w| {
            set.iter()
                .map(|a| tchebycheff(a.as_ref(), w, z))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(total / weights.len() as f64)
}

/// `g[a][w]` for every point and weight.
fn utility_matrix<V: AsRef<[f64]>>(set: &[V], weights: &[WeightVector], z: &[f64]) -> Vec<Vec<f64>> {
    set.iter()
        .map(|a| weights.iter().map(|w| tchebycheff(a.as_ref(), w, z)).collect())
        .collect()
}

/// Increase of R2 caused by removing each alive point.
fn contributions_from(g: &[Vec<f64>], alive: &[bool], n_weights: usize) -> Vec<f64> {
    let mut contrib = vec![0.0; g.len()];
    for w in 0..n_weights {
        let (mut best, mut second, mut arg) = (f64::INFINITY, f64::INFINITY, usize::MAX);
        for (a, row) in g.iter().enumerate() {
            if !alive[a] {
                continue;
            }
            let v = row[w];
            if v < best {
                second = best;
                best = v;
                arg = a;
            } else if v < second {
                second = v;
            }
        }
        if arg != usize::MAX && second.is_finite() {
            contrib[arg] += second - best;
        }
    }
    let scale = n_weights as f64;
    contrib.iter_mut().for_each(|c| *c /= scale);
    contrib
}

/// `R2(A \ {a}) - R2(A)` for every `a`; ties in the inner minimum credit the lower index.
pub fn r2_contributions<V: AsRef<[f64]>>(set: &[V], weights: &[WeightVector], z: &[f64]) -> Vec<f64> {
    let g = utility_matrix(set, weights, z);
    contributions_from(&g, &vec![true; set.len()], weights.len())
}

/// Each point's smallest Tchebycheff value over the weights.
fn own_best(g: &[Vec<f64>]) -> Vec<f64> {
    g.iter()
        .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
        .collect()
}

/// Greedy leave-one-out reduction to `keep` points: repeatedly drops the
/// point with the smallest contribution. Equal contributions (typically
/// zero) drop the point with the larger own best Tchebycheff value first,
/// then the lower index. Returns the surviving indices in ascending order.
pub fn r2_reduce<V: AsRef<[f64]>>(set: &[V], weights: &[WeightVector], z: &[f64], keep: usize) -> Vec<usize> {
    let g = utility_matrix(set, weights, z);
    let best = own_best(&g);
    let mut alive = vec![true; set.len()];
    let mut count = set.len();
    while count > keep.max(1) {
        let contrib = contributions_from(&g, &alive, weights.len());
        let victim = (0..set.len())
            .filter(|&a| alive[a])
            .min_by(|&a, &b| {
                contrib[a]
                    .total_cmp(&contrib[b])
                    .then(best[b].total_cmp(&best[a]))
                    .then(a.cmp(&b))
            })
            .expect("alive set is nonempty");
        alive[victim] = false;
        count -= 1;
    }
    (0..set.len()).filter(|&a| alive[a]).collect()
}

/// For each point, the weight on which its Tchebycheff value is smallest
/// (lowest index on ties).
pub fn r2_association<V: AsRef<[f64]>>(set: &[V], weights: &[WeightVector], z: &[f64]) -> Vec<usize> {
    set.iter()
        .map(|a| {
            let mut best = (f64::INFINITY, 0);
            for (k, w) in weights.iter().enumerate() {
                let v = tchebycheff(a.as_ref(), w, z);
                if v < best.0 {
                    best = (v, k);
                }
            }
            best.1
        })
        .collect()
}

pub(crate) struct R2Ibea {
    pop: Vec<Solution>,
    weights: Vec<WeightVector>,
    ideal: Vec<f64>,
}

impl R2Ibea {
    pub fn new(pop: Vec<Solution>, weights: Vec<WeightVector>) -> Self {
        let ideal = ideal_of(&pop);
        Self { pop, weights, ideal }
    }

    fn objectives(pop: &[Solution]) -> Vec<&[f64]> {
        pop.iter().map(|s| s.f.as_slice()).collect()
    }
}

impl Engine for R2Ibea {
    fn population(&self) -> &[Solution] {
        &self.pop
    }

    fn generation(&mut self, ctx: &mut Context<'_>) {
        let n = self.pop.len();
        let g = utility_matrix(&Self::objectives(&self.pop), &self.weights, &self.ideal);
        let fitness = contributions_from(&g, &vec![true; n], self.weights.len());
        // rank the members so that contribution ties fall back to the own best value
        let best = own_best(&g);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            fitness[b]
                .total_cmp(&fitness[a])
                .then(best[a].total_cmp(&best[b]))
                .then(a.cmp(&b))
        });
        let mut position = vec![0; n];
        for (pos, &i) in order.iter().enumerate() {
            position[i] = pos;
        }
        let bounds = &ctx.problem.bounds;
        let mut offspring = Vec::with_capacity(n);
        while offspring.len() < n {
            let a = binary_tournament(&position, &fitness, &mut ctx.rng);
            let b = binary_tournament(&position, &fitness, &mut ctx.rng);
            let (c1, c2) = sbx_crossover(&self.pop[a].x, &self.pop[b].x, ctx.variation, bounds, &mut ctx.rng);
            for c in [c1, c2] {
                if offspring.len() < n {
                    let c = polynomial_mutation(&c, ctx.variation, bounds, &mut ctx.rng);
                    offspring.push(ctx.evaluate(c));
                }
            }
        }
        for s in &offspring {
            update_ideal(&mut self.ideal, &s.f);
        }
        let mut merged = std::mem::take(&mut self.pop);
        merged.extend(offspring);
        let keep = r2_reduce(&Self::objectives(&merged), &self.weights, &self.ideal, n);
        let mut slots: Vec<Option<Solution>> = merged.into_iter().map(Some).collect();
        self.pop = keep.into_iter().map(|i| slots[i].take().unwrap()).collect();
    }

    fn apply_model(&mut self, model: &PreferenceModel, mu: usize, eta_step: f64) -> Result<()> {
        for s in &mut self.pop {
            s.utility = Some(model.score(&s.f)?);
        }
        let objectives = Self::objectives(&self.pop);
        let association = r2_association(&objectives, &self.weights, &self.ideal);
        self.weights = adjust_weights(&self.weights, &objectives, &association, model, mu, eta_step)?;
        Ok(())
    }

    fn weights(&self) -> Option<&[WeightVector]> {
        Some(&self.weights)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn nested_loop_r2(set: &[Vec<f64>], weights: &[Vec<f64>], z: &[f64]) -> f64 {
        let mut total = 0.0;
        for w in weights {
            let mut best = f64::INFINITY;
            for a in set {
                let mut g = f64::NEG_INFINITY;
                for j in 0..z.len() {
                    g = g.max(w[j] * (a[j] - z[j]).abs());
                }
                best = best.min(g);
            }
            total += best;
        }
        total / weights.len() as f64
    }

    fn random_set(rng: &mut ChaCha8Rng, count: usize, m: usize) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| (0..m).map(|_| rng.random::<f64>()).collect())
            .collect()
    }

    #[test]
    fn single_point_single_weight() {
        let r = r2_indicator(&[vec![0.2, 0.15, 0.15]], &[vec![1.0, 1.0, 1.0]], &[0.0; 3]).unwrap();
        assert_eq!(r, 0.2);
        let empty: Vec<Vec<f64>> = Vec::new();
        assert!(r2_indicator(&empty, &[vec![1.0]], &[0.0]).is_err());
    }

    #[test]
    fn matches_nested_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let a = random_set(&mut rng, 5, 3);
            let w = random_set(&mut rng, 8, 3);
            let z = vec![0.0; 3];
            assert_eq!(r2_indicator(&a, &w, &z).unwrap(), nested_loop_r2(&a, &w, &z));
        }
    }

    #[test]
    fn greedy_removal_matches_exhaustive_leave_one_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let a = random_set(&mut rng, 7, 3);
            let w = random_set(&mut rng, 12, 3);
            let z = vec![0.0; 3];
            let own = |p: &Vec<f64>| w.iter().map(|wk| tchebycheff(p, wk, &z)).fold(f64::INFINITY, f64::min);
            let mut best = (f64::INFINITY, f64::NEG_INFINITY, 0);
            for skip in 0..a.len() {
                let rest: Vec<Vec<f64>> = a
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, p)| p.clone())
                    .collect();
                let v = nested_loop_r2(&rest, &w, &z);
                let o = own(&a[skip]);
                if v < best.0 || (v == best.0 && o > best.1) {
                    best = (v, o, skip);
                }
            }
            let kept = r2_reduce(&a, &w, &z, a.len() - 1);
            let removed: Vec<usize> = (0..a.len()).filter(|i| !kept.contains(i)).collect();
            assert_eq!(removed, vec![best.2]);
        }
    }

    #[test]
    fn duplicates_removed_first_and_full_size_unchanged() {
        let a = vec![vec![0.1, 0.9], vec![0.5, 0.5], vec![0.5, 0.5], vec![0.9, 0.1]];
        let w = crate::elicitation::das_dennis(2, 10).unwrap();
        let kept = r2_reduce(&a, &w, &[0.0, 0.0], 3);
        assert_eq!(kept.len(), 3);
        assert!(kept.contains(&0) && kept.contains(&3));
        assert_eq!(r2_reduce(&a, &w, &[0.0, 0.0], 4), vec![0, 1, 2, 3]);
    }

    proptest! {
        #[test]
        fn adding_a_point_never_increases_r2(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_set(&mut rng, 6, 3);
            let w = random_set(&mut rng, 10, 3);
            let z = vec![0.0; 3];
            let sub = &a[..5];
            prop_assert!(r2_indicator(&a, &w, &z).unwrap() <= r2_indicator(sub, &w, &z).unwrap());
        }
    }
}
