//! Pairwise learning-to-rank preference model.
//!
//! A single-hidden-layer network `u: ℝᵐ → ℝ` scores objective vectors; a
//! comparison `⟨fᵢ, fⱼ, c⟩` is modelled by `P(fᵢ ≻ fⱼ) = 1 / (1 + e^{-σ(uᵢ - uⱼ)})`
//! and trained with the cross-entropy against the target `(1 + c) / 2`.
//! Gradients are accumulated per distinct objective vector: every pair only
//! contributes a scalar `λ` to its two endpoints, so one forward/backward pass
//! per distinct vector suffices.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::ObjectiveVector;

/// Outcome of one holistic comparison of `fi` against `fj`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Better,
    Worse,
    Indifferent,
}

impl Outcome {
    /// `c ∈ {1, -1, 0}`.
    pub fn value(self) -> f64 {
        match self {
            Outcome::Better => 1.0,
            Outcome::Worse => -1.0,
            Outcome::Indifferent => 0.0,
        }
    }

    pub fn from_value(c: i32) -> Option<Self> {
        match c {
            1 => Some(Outcome::Better),
            -1 => Some(Outcome::Worse),
            0 => Some(Outcome::Indifferent),
            _ => None,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Outcome::Better => Outcome::Worse,
            Outcome::Worse => Outcome::Better,
            Outcome::Indifferent => Outcome::Indifferent,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub fi: ObjectiveVector,
    pub fj: ObjectiveVector,
    pub outcome: Outcome,
}

impl ComparisonRecord {
    pub fn new(fi: ObjectiveVector, fj: ObjectiveVector, outcome: Outcome) -> Result<Self> {
        if fi.len() != fj.len() {
            return Err(Error::DimensionMismatch {
                expected: fi.len(),
                actual: fj.len(),
            });
        }
        Ok(Self { fi, fj, outcome })
    }
}

/// Affine map `(f - lower) / scale` applied before the network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub lower: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Normalization {
    pub fn identity(m: usize) -> Self {
        Self {
            lower: vec![0.0; m],
            scale: vec![1.0; m],
        }
    }

    /// Per-objective min/max of `points`; degenerate ranges map with scale 1.
    pub fn from_points<'a, I>(m: usize, points: I) -> Self
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![f64::NEG_INFINITY; m];
        for p in points {
            for k in 0..m {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        if lo.iter().any(|v| !v.is_finite()) {
            return Self::identity(m);
        }
        let scale = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| if h - l > 1e-12 { h - l } else { 1.0 })
            .collect();
        Self { lower: lo, scale }
    }

    fn apply(&self, f: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            f.iter()
                .zip(&self.lower)
                .zip(&self.scale)
                .map(|((v, l), s)| (v - l) / s),
        );
    }
}

/// The ranking network. With `hidden_dim == 0` the model is the linear form
/// `u = Σ w̃ᵢ fᵢ`; otherwise `u = Σₖ vₖ tanh(Σᵢ Wₖᵢ fᵢ + bₖ)`.
///
/// Parameters are stored flat: `W` (row-major, `hidden × m`), then `b`, then `v`.
/// An output bias would cancel in every pairwise difference and is omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreferenceModel {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub sigma: f64,
    pub params: Vec<f64>,
    pub normalization: Normalization,
}

pub fn parameter_count(input_dim: usize, hidden_dim: usize) -> usize {
    if hidden_dim == 0 {
        input_dim
    } else {
        hidden_dim * (input_dim + 2)
    }
}

impl PreferenceModel {
    pub fn new(
        input_dim: usize,
        hidden_dim: usize,
        sigma: f64,
        params: Vec<f64>,
        normalization: Normalization,
    ) -> Result<Self> {
        let model = Self {
            input_dim,
            hidden_dim,
            sigma,
            params,
            normalization,
        };
        model.validate()?;
        Ok(model)
    }

    /// Parameters drawn uniformly from [-0.5, 0.5].
    pub fn random(input_dim: usize, hidden_dim: usize, sigma: f64, normalization: Normalization, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = (0..parameter_count(input_dim, hidden_dim))
            .map(|_| rng.random_range(-0.5..=0.5))
            .collect();
        Self {
            input_dim,
            hidden_dim,
            sigma,
            params,
            normalization,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let expected = parameter_count(self.input_dim, self.hidden_dim);
        if self.params.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: self.params.len(),
            });
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::config("params", "parameters must be finite"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::config("sigma", "must be positive"));
        }
        if self.normalization.lower.len() != self.input_dim || self.normalization.scale.len() != self.input_dim {
            return Err(Error::config("normalization", "length must equal input_dim"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(s)?;
        model.validate()?;
        Ok(model)
    }

    pub fn score(&self, f: &[f64]) -> Result<f64> {
        self.check_dim(f)?;
        let mut scratch = Scratch::default();
        Ok(self.forward(f, &mut scratch))
    }

    fn check_dim(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: f.len(),
            });
        }
        Ok(())
    }

    /// Forward pass; leaves the normalized input and hidden activations in `s`.
    fn forward(&self, f: &[f64], s: &mut Scratch) -> f64 {
        self.normalization.apply(f, &mut s.input);
        let m = self.input_dim;
        if self.hidden_dim == 0 {
            return self.params.iter().zip(&s.input).map(|(w, x)| w * x).sum();
        }
        let h = self.hidden_dim;
        let (weights, rest) = self.params.split_at(h * m);
        let (bias, out) = rest.split_at(h);
        s.hidden.clear();
        s.hidden.extend((0..h).map(|k| {
            let row = &weights[k * m..(k + 1) * m];
            let z: f64 = row.iter().zip(&s.input).map(|(w, x)| w * x).sum::<f64>() + bias[k];
            z.tanh()
        }));
        out.iter().zip(&s.hidden).map(|(v, a)| v * a).sum()
    }

    /// `grad += coef · ∂u/∂θ` using the activations left by `forward`.
    fn backward(&self, s: &Scratch, coef: f64, grad: &mut [f64]) {
        let m = self.input_dim;
        if self.hidden_dim == 0 {
            for (g, x) in grad.iter_mut().zip(&s.input) {
                *g += coef * x;
            }
            return;
        }
        let h = self.hidden_dim;
        let out = &self.params[h * (m + 1)..];
        let (g_weights, g_rest) = grad.split_at_mut(h * m);
        let (g_bias, g_out) = g_rest.split_at_mut(h);
        for k in 0..h {
            let a = s.hidden[k];
            g_out[k] += coef * a;
            let back = coef * out[k] * (1.0 - a * a);
            g_bias[k] += back;
            for (g, x) in g_weights[k * m..(k + 1) * m].iter_mut().zip(&s.input) {
                *g += back * x;
            }
        }
    }

    /// `P(fi ≻ fj)`.
    pub fn pair_probability(&self, fi: &[f64], fj: &[f64]) -> Result<f64> {
        let d = self.score(fi)? - self.score(fj)?;
        Ok(logistic(self.sigma * d))
    }

    pub fn pair_loss(&self, record: &ComparisonRecord) -> Result<f64> {
        let d = self.score(&record.fi)? - self.score(&record.fj)?;
        Ok(loss_from_difference(self.sigma, d, record.outcome))
    }

    pub fn total_loss(&self, records: &[ComparisonRecord]) -> Result<f64> {
        if records.is_empty() {
            return Err(Error::Empty("comparison records"));
        }
        records.iter().map(|r| self.pair_loss(r)).sum()
    }

    pub fn gradient(&self, records: &[ComparisonRecord]) -> Result<Vec<f64>> {
        self.gradient_with_stats(records).map(|(g, _)| g)
    }

    /// Gradient of the total loss plus the number of network passes used.
    pub fn gradient_with_stats(&self, records: &[ComparisonRecord]) -> Result<(Vec<f64>, GradientStats)> {
        if records.is_empty() {
            return Err(Error::Empty("comparison records"));
        }
        for r in records {
            self.check_dim(&r.fi)?;
            self.check_dim(&r.fj)?;
        }
        let batch = IndexedBatch::new(records.iter());
        let mut grad = vec![0.0; self.params.len()];
        let (_, passes) = self.accumulate(&batch, &batch.all_pairs(), &mut grad);
        Ok((
            grad,
            GradientStats {
                pairs: records.len(),
                network_passes: passes,
            },
        ))
    }

    /// Loss over `pairs` and its gradient added into `grad`.
    fn accumulate(&self, batch: &IndexedBatch, pairs: &[usize], grad: &mut [f64]) -> (f64, usize) {
        let used = batch.vertices_of(pairs);
        let mut scratch: Vec<Scratch> = Vec::with_capacity(used.len());
        let mut utility = vec![0.0; batch.vectors.len()];
        let mut slot = vec![usize::MAX; batch.vectors.len()];
        for &v in &used {
            let mut s = Scratch::default();
            utility[v] = self.forward(&batch.vectors[v], &mut s);
            slot[v] = scratch.len();
            scratch.push(s);
        }
        let mut coef = vec![0.0; batch.vectors.len()];
        let mut loss = 0.0;
        for &p in pairs {
            let (i, j, outcome) = batch.pairs[p];
            let d = utility[i] - utility[j];
            loss += loss_from_difference(self.sigma, d, outcome);
            let lambda = lambda(self.sigma, d, outcome);
            coef[i] += lambda;
            coef[j] -= lambda;
        }
        for &v in &used {
            if coef[v] != 0.0 {
                self.backward(&scratch[slot[v]], coef[v], grad);
            }
        }
        (loss, used.len())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GradientStats {
    pub pairs: usize,
    pub network_passes: usize,
}

#[derive(Default)]
struct Scratch {
    input: Vec<f64>,
    hidden: Vec<f64>,
}

/// Records re-expressed over a table of distinct objective vectors.
struct IndexedBatch {
    vectors: Vec<Vec<f64>>,
    pairs: Vec<(usize, usize, Outcome)>,
}

impl IndexedBatch {
    fn new<'a>(records: impl Iterator<Item = &'a ComparisonRecord>) -> Self {
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut vectors = Vec::new();
        let mut id = |f: &[f64]| -> usize {
            let key: Vec<u64> = f.iter().map(|v| v.to_bits()).collect();
            *index.entry(key).or_insert_with(|| {
                vectors.push(f.to_vec());
                vectors.len() - 1
            })
        };
        let pairs = records.map(|r| (id(&r.fi), id(&r.fj), r.outcome)).collect();
        Self { vectors, pairs }
    }

    fn all_pairs(&self) -> Vec<usize> {
        (0..self.pairs.len()).collect()
    }

    fn vertices_of(&self, pairs: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.vectors.len()];
        for &p in pairs {
            let (i, j, _) = self.pairs[p];
            seen[i] = true;
            seen[j] = true;
        }
        (0..self.vectors.len()).filter(|&v| seen[v]).collect()
    }
}

pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `ℓ = ½(1 - c)σΔ + log(1 + e^{-σΔ})` with `Δ = u(fi) - u(fj)`.
fn loss_from_difference(sigma: f64, d: f64, outcome: Outcome) -> f64 {
    let z = sigma * d;
    match outcome {
        Outcome::Better => softplus(-z),
        Outcome::Worse => softplus(z),
        Outcome::Indifferent => 0.5 * z + softplus(-z),
    }
}

/// `λ = ∂ℓ/∂u(fi) = σ(½(1 - c) - 1 / (1 + e^{σΔ}))`.
fn lambda(sigma: f64, d: f64, outcome: Outcome) -> f64 {
    sigma * (0.5 * (1.0 - outcome.value()) - logistic(-sigma * d))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Pairs per SGD step; `None` trains full-batch.
    pub batch_size: Option<usize>,
    pub hidden_dim: usize,
    pub sigma: f64,
    pub init_seed: u64,
    /// Train (a no-op) instead of failing when every record is indifferent.
    pub allow_all_indifferent: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 500,
            batch_size: None,
            hidden_dim: 10,
            sigma: 1.0,
            init_seed: 0,
            allow_all_indifferent: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs", "must be positive"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::config("batch_size", "must be positive"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::config("sigma", "must be positive"));
        }
        Ok(())
    }
}

/// Trains on `records`, normalizing inputs by the records' own min/max.
pub fn train(records: &[ComparisonRecord], m: usize, cfg: &TrainConfig) -> Result<PreferenceModel> {
    let norm = Normalization::from_points(m, records.iter().flat_map(|r| [r.fi.as_slice(), r.fj.as_slice()]));
    train_with_normalization(records, m, cfg, norm)
}

/// Gradient descent from a fresh random initialization; returns the
/// parameters with the lowest total loss seen (the initial ones included),
/// so the final loss never exceeds the initial loss.
///
/// Records that repeat the same pair are trained as given.
pub fn train_with_normalization(
    records: &[ComparisonRecord],
    m: usize,
    cfg: &TrainConfig,
    normalization: Normalization,
) -> Result<PreferenceModel> {
    cfg.validate()?;
    if records.is_empty() {
        return Err(Error::Empty("comparison records"));
    }
    for r in records {
        for f in [&r.fi, &r.fj] {
            if f.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    actual: f.len(),
                });
            }
        }
    }
    let mut model = PreferenceModel::random(m, cfg.hidden_dim, cfg.sigma, normalization, cfg.init_seed);
    if records.iter().all(|r| r.outcome == Outcome::Indifferent) {
        if cfg.allow_all_indifferent {
            return Ok(model);
        }
        return Err(Error::NoStrictPreference);
    }

    let batch = IndexedBatch::new(records.iter());
    let all = batch.all_pairs();
    let batch_size = cfg.batch_size.unwrap_or(all.len()).min(all.len());
    let mut order = all.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.init_seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut grad = vec![0.0; model.params.len()];

    let mut best_params = model.params.clone();
    let mut best_loss = f64::INFINITY;
    for _ in 0..cfg.epochs {
        if batch_size < all.len() {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let (loss, _) = model.accumulate(&batch, chunk, &mut grad);
            if chunk.len() == all.len() && loss < best_loss {
                best_loss = loss;
                best_params.copy_from_slice(&model.params);
            }
            for (p, g) in model.params.iter_mut().zip(&grad) {
                *p -= cfg.learning_rate * g;
            }
        }
        if batch_size < all.len() {
            let loss = full_loss(&model, &batch);
            if loss < best_loss {
                best_loss = loss;
                best_params.copy_from_slice(&model.params);
            }
        }
    }
    let last = full_loss(&model, &batch);
    if last < best_loss {
        best_params.copy_from_slice(&model.params);
    }
    model.params = best_params;
    Ok(model)
}

fn full_loss(model: &PreferenceModel, batch: &IndexedBatch) -> f64 {
    let mut s = Scratch::default();
    let u: Vec<f64> = batch.vectors.iter().map(|v| model.forward(v, &mut s)).collect();
    batch
        .pairs
        .iter()
        .map(|&(i, j, o)| loss_from_difference(model.sigma, u[i] - u[j], o))
        .sum()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::Rng;

    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn linear(w: Vec<f64>, sigma: f64) -> PreferenceModel {
        let m = w.len();
        PreferenceModel::new(m, 0, sigma, w, Normalization::identity(m)).unwrap()
    }

    /// Independent forward pass written from the formula.
    fn naive_forward(model: &PreferenceModel, f: &[f64]) -> f64 {
        let m = model.input_dim;
        let h = model.hidden_dim;
        let x: Vec<f64> = (0..m)
            .map(|i| (f[i] - model.normalization.lower[i]) / model.normalization.scale[i])
            .collect();
        let mut u = 0.0;
        for k in 0..h {
            let mut z = model.params[h * m + k];
            for i in 0..m {
                z += model.params[k * m + i] * x[i];
            }
            u += model.params[h * m + h + k] * z.tanh();
        }
        u
    }

    /// Per-pair backprop without grouping, by perturbation-free chain rule on
    /// each endpoint separately.
    fn naive_gradient(model: &PreferenceModel, records: &[ComparisonRecord]) -> Vec<f64> {
        let mut grad = vec![0.0; model.params.len()];
        for r in records {
            let ui = naive_forward(model, &r.fi);
            let uj = naive_forward(model, &r.fj);
            let c = r.outcome.value();
            let z = model.sigma * (ui - uj);
            let dl_dui = model.sigma * (0.5 * (1.0 - c) - 1.0 / (1.0 + z.exp()));
            let gi = naive_param_grad(model, &r.fi);
            let gj = naive_param_grad(model, &r.fj);
            for k in 0..grad.len() {
                grad[k] += dl_dui * gi[k] - dl_dui * gj[k];
            }
        }
        grad
    }

    fn naive_param_grad(model: &PreferenceModel, f: &[f64]) -> Vec<f64> {
        let m = model.input_dim;
        let h = model.hidden_dim;
        let x: Vec<f64> = (0..m)
            .map(|i| (f[i] - model.normalization.lower[i]) / model.normalization.scale[i])
            .collect();
        let mut g = vec![0.0; model.params.len()];
        for k in 0..h {
            let mut z = model.params[h * m + k];
            for i in 0..m {
                z += model.params[k * m + i] * x[i];
            }
            let a = z.tanh();
            let v = model.params[h * m + h + k];
            g[h * m + h + k] = a;
            g[h * m + k] = v * (1.0 - a * a);
            for i in 0..m {
                g[k * m + i] = v * (1.0 - a * a) * x[i];
            }
        }
        g
    }

    fn random_records(m: usize, count: usize, distinct: usize, seed: u64) -> Vec<ComparisonRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool: Vec<Vec<f64>> = (0..distinct)
            .map(|_| (0..m).map(|_| rng.random::<f64>()).collect())
            .collect();
        (0..count)
            .map(|_| {
                let i = rng.random_range(0..distinct);
                let mut j = rng.random_range(0..distinct);
                if j == i {
                    j = (i + 1) % distinct;
                }
                let outcome = [Outcome::Better, Outcome::Worse, Outcome::Indifferent][rng.random_range(0..3)];
                ComparisonRecord::new(pool[i].clone(), pool[j].clone(), outcome).unwrap()
            })
            .collect()
    }

    fn random_model(m: usize, seed: u64) -> PreferenceModel {
        let norm = Normalization {
            lower: vec![0.1; m],
            scale: vec![0.8; m],
        };
        let mut model = PreferenceModel::random(m, 4, 1.3, norm, seed);
        // widen the initialization so the tanh units are not all linear
        model.params.iter_mut().for_each(|p| *p *= 3.0);
        model
    }

    #[test]
    fn linear_score_example() {
        let model = linear(vec![1.0, 0.0, 0.0], 1.0);
        assert_eq!(model.score(&[0.4, 0.9, 0.9]).unwrap(), 0.4);
        assert!(model.score(&[0.4, 0.9]).is_err());
    }

    #[test]
    fn forward_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let model = random_model(5, 4);
        for _ in 0..100 {
            let f: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
            let a = model.score(&f).unwrap();
            assert!((a - naive_forward(&model, &f)).abs() <= 1e-12);
            assert_eq!(a.to_bits(), model.score(&f).unwrap().to_bits());
        }
    }

    #[test]
    fn probability_examples() {
        let model = linear(vec![1.0, 0.0], 1.0);
        assert_eq!(model.pair_probability(&[0.3, 0.0], &[0.3, 5.0]).unwrap(), 0.5);
        assert!(model.pair_probability(&[20.0, 0.0], &[0.0, 0.0]).unwrap() > 1.0 - 1e-8);
        let sharp = linear(vec![1.0, 0.0], 2.0);
        let logit = |p: f64| (p / (1.0 - p)).ln();
        let p1 = model.pair_probability(&[0.7, 0.0], &[0.2, 0.0]).unwrap();
        let p2 = sharp.pair_probability(&[0.7, 0.0], &[0.2, 0.0]).unwrap();
        assert!((logit(p2) - 2.0 * logit(p1)).abs() < 1e-12);
        // extreme differences stay finite
        let p = model.pair_probability(&[-1e6, 0.0], &[1e6, 0.0]).unwrap();
        assert!(p >= 0.0 && p.is_finite());
    }

    #[test]
    fn loss_examples() {
        let model = linear(vec![1.0, 0.0], 1.0);
        let rec = |a: f64, b: f64, o| ComparisonRecord::new(vec![a, 0.0], vec![b, 0.0], o).unwrap();
        assert!((model.pair_loss(&rec(0.2, 0.2, Outcome::Better)).unwrap() - LN2).abs() < 1e-15);
        assert!((model.pair_loss(&rec(0.2, 0.2, Outcome::Worse)).unwrap() - LN2).abs() < 1e-15);
        let l = model.pair_loss(&rec(10.0, 0.0, Outcome::Better)).unwrap();
        assert!((l - 4.539889921686465e-5).abs() < 1e-15, "{l}");
        assert!(model.pair_loss(&rec(0.7, 0.1, Outcome::Indifferent)).unwrap() > 0.0);
    }

    #[test]
    fn total_loss_is_additive() {
        let model = random_model(3, 8);
        let records = random_records(3, 20, 12, 5);
        let summed: f64 = records.iter().map(|r| model.pair_loss(r).unwrap()).sum();
        assert!((model.total_loss(&records).unwrap() - summed).abs() <= 1e-12);
        let one = &records[..1];
        assert_eq!(model.total_loss(one).unwrap(), model.pair_loss(&records[0]).unwrap());
        let twice = vec![records[0].clone(), records[0].clone()];
        assert_eq!(
            model.total_loss(&twice).unwrap(),
            2.0 * model.pair_loss(&records[0]).unwrap()
        );
        assert!(model.total_loss(&[]).is_err());
    }

    #[test]
    fn grouped_gradient_equals_naive_gradient() {
        for seed in 0..20 {
            let model = random_model(4, seed);
            let records = random_records(4, 40, 10, seed + 100);
            let (g, stats) = model.gradient_with_stats(&records).unwrap();
            let naive = naive_gradient(&model, &records);
            for (a, b) in g.iter().zip(&naive) {
                assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
            }
            // one pass per distinct vector, not two per pair
            assert!(stats.network_passes <= 10);
            assert_eq!(stats.pairs, 40);
        }
    }

    #[test]
    fn saturated_lambda_vanishes() {
        let model = linear(vec![1.0], 1.0);
        let r = ComparisonRecord::new(vec![60.0], vec![0.0], Outcome::Better).unwrap();
        let g = model.gradient(&[r]).unwrap();
        assert!(g[0].abs() < 1e-20);
    }

    #[test]
    fn checkpoint_round_trip_and_validation() {
        let model = random_model(3, 1);
        let back = PreferenceModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
        let mut broken: serde_json::Value = serde_json::from_str(&model.to_json().unwrap()).unwrap();
        broken["params"] = serde_json::json!([1.0, 2.0]);
        assert!(PreferenceModel::from_json(&broken.to_string()).is_err());
    }

    fn working_example() -> Vec<ComparisonRecord> {
        let x = [
            vec![0.167, 0.167, 0.167],
            vec![0.2, 0.15, 0.15],
            vec![0.3, 0.1, 0.1],
            vec![0.4, 0.05, 0.05],
        ];
        [(0, 1), (0, 2), (1, 3)]
            .iter()
            .map(|&(i, j)| ComparisonRecord::new(x[i].clone(), x[j].clone(), Outcome::Better).unwrap())
            .collect()
    }

    #[test]
    fn training_does_not_increase_loss_and_is_deterministic() {
        let records = working_example();
        let cfg = TrainConfig::default();
        let a = train(&records, 3, &cfg).unwrap();
        let b = train(&records, 3, &cfg).unwrap();
        assert_eq!(a, b);
        let init = PreferenceModel::random(3, cfg.hidden_dim, cfg.sigma, a.normalization.clone(), cfg.init_seed);
        assert!(a.total_loss(&records).unwrap() <= init.total_loss(&records).unwrap());
    }

    #[test]
    fn minibatch_training_runs() {
        let records = random_records(3, 30, 10, 2);
        let cfg = TrainConfig {
            batch_size: Some(7),
            epochs: 50,
            ..TrainConfig::default()
        };
        let model = train(&records, 3, &cfg).unwrap();
        model.validate().unwrap();
    }

    #[test]
    fn all_indifferent_records() {
        let r = ComparisonRecord::new(vec![0.1, 0.2], vec![0.3, 0.4], Outcome::Indifferent).unwrap();
        assert!(matches!(
            train(std::slice::from_ref(&r), 2, &TrainConfig::default()),
            Err(Error::NoStrictPreference)
        ));
        let cfg = TrainConfig {
            allow_all_indifferent: true,
            ..TrainConfig::default()
        };
        assert!(train(&[r], 2, &cfg).is_ok());
    }

    #[test]
    fn contradictory_records_stay_above_analytic_minimum() {
        let a = vec![0.2, 0.8];
        let b = vec![0.6, 0.3];
        let records = vec![
            ComparisonRecord::new(a.clone(), b.clone(), Outcome::Better).unwrap(),
            ComparisonRecord::new(b, a, Outcome::Better).unwrap(),
        ];
        let model = train(&records, 2, &TrainConfig::default()).unwrap();
        let loss = model.total_loss(&records).unwrap();
        assert!(loss.is_finite());
        assert!(loss >= 2.0 * LN2 - 1e-12, "{loss}");
    }

    proptest! {
        #[test]
        fn probabilities_antisymmetric_and_translation_free(
            fi in prop::collection::vec(0.0f64..1.0, 3),
            fj in prop::collection::vec(0.0f64..1.0, 3),
            seed in 0u64..1000,
        ) {
            let model = random_model(3, seed);
            let p = model.pair_probability(&fi, &fj).unwrap();
            let q = model.pair_probability(&fj, &fi).unwrap();
            prop_assert!((p + q - 1.0).abs() <= 1e-12);
            prop_assert!(p > 0.0 && p < 1.0);
            let ui = model.score(&fi).unwrap();
            let uj = model.score(&fj).unwrap();
            let shifted = logistic(model.sigma * ((ui + 7.5) - (uj + 7.5)));
            prop_assert!((shifted - p).abs() <= 1e-12);
        }

        #[test]
        fn loss_is_nonnegative(
            d in -50.0f64..50.0,
            c in prop::sample::select(vec![Outcome::Better, Outcome::Worse, Outcome::Indifferent]),
        ) {
            prop_assert!(loss_from_difference(1.0, d, c) >= 0.0);
        }
    }
}
