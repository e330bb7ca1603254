//! NSGA-II with the learned utility replacing crowding distance once a model exists.

use crate::elicitation::utility_truncation_order;
use crate::error::Result;
use crate::evo::{crowding_distance, fast_nondominated_sort, polynomial_mutation, sbx_crossover, Solution};
use crate::ltr::PreferenceModel;

use super::{binary_tournament, Context, Engine};

pub(crate) struct Nsga2 {
    pop: Vec<Solution>,
    model: Option<PreferenceModel>,
}

impl Nsga2 {
    pub fn new(mut pop: Vec<Solution>) -> Self {
        let fronts = fast_nondominated_sort(&objectives(&pop));
        for (r, front) in fronts.iter().enumerate() {
            for &i in front {
                pop[i].rank = Some(r);
            }
        }
        Self { pop, model: None }
    }

    /// Rank and secondary score (utility or crowding) of each member of `pop`.
    fn keys(&self, pop: &[Solution]) -> (Vec<usize>, Vec<f64>, Vec<Vec<usize>>) {
        let objs = objectives(pop);
        let fronts = fast_nondominated_sort(&objs);
        let mut rank = vec![0; pop.len()];
        let mut score = vec![0.0; pop.len()];
        for (r, front) in fronts.iter().enumerate() {
            let crowd = match &self.model {
                Some(_) => None,
                None => Some(crowding_distance(&objs, front)),
            };
            for (k, &i) in front.iter().enumerate() {
                rank[i] = r;
                score[i] = match (&self.model, &crowd) {
                    (Some(m), _) => m.score(&pop[i].f).unwrap_or(f64::NEG_INFINITY),
                    (None, Some(c)) => c[k],
                    (None, None) => unreachable!(),
                };
            }
        }
        (rank, score, fronts)
    }
}

fn objectives(pop: &[Solution]) -> Vec<&[f64]> {
    pop.iter().map(|s| s.f.as_slice()).collect()
}

impl Engine for Nsga2 {
    fn population(&self) -> &[Solution] {
        &self.pop
    }

    fn generation(&mut self, ctx: &mut Context<'_>) {
        let n = self.pop.len();
        let (rank, score, _) = self.keys(&self.pop);
        let bounds = &ctx.problem.bounds;
        let mut offspring = Vec::with_capacity(n);
        while offspring.len() < n {
            let a = binary_tournament(&rank, &score, &mut ctx.rng);
            let b = binary_tournament(&rank, &score, &mut ctx.rng);
            let (c1, c2) = sbx_crossover(&self.pop[a].x, &self.pop[b].x, ctx.variation, bounds, &mut ctx.rng);
            let c1 = polynomial_mutation(&c1, ctx.variation, bounds, &mut ctx.rng);
            let c2 = polynomial_mutation(&c2, ctx.variation, bounds, &mut ctx.rng);
            offspring.push(ctx.evaluate(c1));
            if offspring.len() < n {
                offspring.push(ctx.evaluate(c2));
            }
        }
        let mut merged = std::mem::take(&mut self.pop);
        merged.extend(offspring);
        self.pop = self.survivors(merged, n);
    }

    fn apply_model(&mut self, model: &PreferenceModel, _mu: usize, _eta_step: f64) -> Result<()> {
        for s in &mut self.pop {
            s.utility = Some(model.score(&s.f)?);
        }
        self.model = Some(model.clone());
        Ok(())
    }
}

impl Nsga2 {
    /// Whole fronts while they fit, then the split front truncated by
    /// utility (or crowding distance before the first model).
    fn survivors(&self, merged: Vec<Solution>, n: usize) -> Vec<Solution> {
        let (_, score, fronts) = self.keys(&merged);
        let mut keep: Vec<(usize, usize)> = Vec::with_capacity(n);
        for (r, front) in fronts.iter().enumerate() {
            if keep.len() + front.len() <= n {
                keep.extend(front.iter().map(|&i| (i, r)));
                continue;
            }
            let room = n - keep.len();
            let front_scores: Vec<f64> = front.iter().map(|&i| score[i]).collect();
            let order = utility_truncation_order(&front_scores);
            keep.extend(order.into_iter().take(room).map(|k| (front[k], r)));
            break;
        }
        let mut slots: Vec<Option<Solution>> = merged.into_iter().map(Some).collect();
        keep.into_iter()
            .map(|(i, r)| {
                let mut s = slots[i].take().expect("survivor selected twice");
                s.rank = Some(r);
                s.utility = self.model.as_ref().map(|_| score[i]);
                s
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltr::Normalization;

    fn sol(f: Vec<f64>) -> Solution {
        Solution::new(vec![0.0], f)
    }

    #[test]
    fn nondominated_merge_of_exact_size_survives_whole() {
        let pop: Vec<Solution> = (0..4).map(|i| sol(vec![i as f64, 3.0 - i as f64])).collect();
        let engine = Nsga2::new(pop.clone());
        let out = engine.survivors(pop.clone(), 4);
        let fs: Vec<_> = out.iter().map(|s| s.f.clone()).collect();
        assert_eq!(fs, pop.iter().map(|s| s.f.clone()).collect::<Vec<_>>());
    }

    #[test]
    fn split_front_drops_lowest_utility() {
        // front 0: three points; front 1: one point; keep 2
        let merged = vec![
            sol(vec![0.0, 2.0]),
            sol(vec![1.0, 1.0]),
            sol(vec![2.0, 0.0]),
            sol(vec![3.0, 3.0]),
        ];
        let mut engine = Nsga2::new(merged.clone());
        let model = PreferenceModel::new(2, 0, 1.0, vec![-1.0, 0.0], Normalization::identity(2)).unwrap();
        engine.apply_model(&model, 2, 0.2).unwrap();
        let out = engine.survivors(merged, 2);
        let fs: Vec<_> = out.iter().map(|s| s.f.clone()).collect();
        assert_eq!(fs, vec![vec![0.0, 2.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn split_front_uses_crowding_without_model() {
        let merged = vec![sol(vec![0.0, 2.0]), sol(vec![1.0, 1.0]), sol(vec![2.0, 0.0])];
        let engine = Nsga2::new(merged.clone());
        let out = engine.survivors(merged, 2);
        let fs: Vec<_> = out.iter().map(|s| s.f.clone()).collect();
        assert_eq!(fs, vec![vec![0.0, 2.0], vec![2.0, 0.0]]);
    }
}
