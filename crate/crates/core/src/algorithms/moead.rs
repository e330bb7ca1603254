//! MOEA/D with Tchebycheff subproblems whose weights follow the learned preference.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::elicitation::{adjust_weights, WeightVector};
use crate::error::Result;
use crate::evo::{polynomial_mutation, sbx_crossover, Solution};
use crate::ltr::PreferenceModel;

use super::{ideal_of, update_ideal, Context, Engine};

pub(crate) const NEIGHBORHOOD_SIZE: usize = 20;
pub(crate) const NEIGHBOR_MATING_PROB: f64 = 0.9;
pub(crate) const MAX_REPLACEMENTS: usize = 2;

/// `g(f | w, z) = max_j w_j |f_j - z_j|`.
pub fn tchebycheff(f: &[f64], w: &[f64], z: &[f64]) -> f64 {
    f.iter()
        .zip(w)
        .zip(z)
        .map(|((fj, wj), zj)| wj * (fj - zj).abs())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// The `t` nearest weights (Euclidean, itself included) of each weight;
/// distance ties go to the lower index.
pub fn neighborhoods(weights: &[WeightVector], t: usize) -> Vec<Vec<usize>> {
    let t = t.min(weights.len());
    weights
        .iter()
        .map(|w| {
            let mut d: Vec<(f64, usize)> = weights
                .iter()
                .enumerate()
                .map(|(j, v)| (w.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum(), j))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.into_iter().take(t).map(|(_, j)| j).collect()
        })
        .collect()
}

pub(crate) struct Moead {
    pop: Vec<Solution>,
    weights: Vec<WeightVector>,
    neighbors: Vec<Vec<usize>>,
    ideal: Vec<f64>,
}

impl Moead {
    pub fn new(pop: Vec<Solution>, weights: Vec<WeightVector>) -> Self {
        let neighbors = neighborhoods(&weights, NEIGHBORHOOD_SIZE);
        let ideal = ideal_of(&pop);
        Self {
            pop,
            weights,
            neighbors,
            ideal,
        }
    }
}

impl Engine for Moead {
    fn population(&self) -> &[Solution] {
        &self.pop
    }

    fn generation(&mut self, ctx: &mut Context<'_>) {
        let n = self.pop.len();
        let everyone: Vec<usize> = (0..n).collect();
        let bounds = &ctx.problem.bounds;
        for i in 0..n {
            let pool: &[usize] = if ctx.rng.random::<f64>() < NEIGHBOR_MATING_PROB {
                &self.neighbors[i]
            } else {
                &everyone
            };
            let a = pool[ctx.rng.random_range(0..pool.len())];
            let b = pool[ctx.rng.random_range(0..pool.len())];
            let (child, _) = sbx_crossover(&self.pop[a].x, &self.pop[b].x, ctx.variation, bounds, &mut ctx.rng);
            let child = polynomial_mutation(&child, ctx.variation, bounds, &mut ctx.rng);
            let child = ctx.evaluate(child);
            update_ideal(&mut self.ideal, &child.f);

            let mut order = pool.to_vec();
            order.shuffle(&mut ctx.rng);
            let mut replaced = 0;
            for j in order {
                let w = &self.weights[j];
                if tchebycheff(&child.f, w, &self.ideal) < tchebycheff(&self.pop[j].f, w, &self.ideal) {
                    self.pop[j] = child.clone();
                    replaced += 1;
                    if replaced >= MAX_REPLACEMENTS {
                        break;
                    }
                }
            }
        }
    }

    fn apply_model(&mut self, model: &PreferenceModel, mu: usize, eta_step: f64) -> Result<()> {
        for s in &mut self.pop {
            s.utility = Some(model.score(&s.f)?);
        }
        let objectives: Vec<&[f64]> = self.pop.iter().map(|s| s.f.as_slice()).collect();
        let association: Vec<usize> = (0..self.pop.len()).collect();
        self.weights = adjust_weights(&self.weights, &objectives, &association, model, mu, eta_step)?;
        self.neighbors = neighborhoods(&self.weights, NEIGHBORHOOD_SIZE);
        Ok(())
    }

    fn weights(&self) -> Option<&[WeightVector]> {
        Some(&self.weights)
    }
}
