//! Quality metrics and nonparametric statistics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Smallest Euclidean distance from any member to `golden`.
pub fn approx_error<V: AsRef<[f64]>>(members: &[V], golden: &[f64]) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::Empty("population"));
    }
    for v in members {
        if v.as_ref().len() != golden.len() {
            return Err(Error::DimensionMismatch {
                expected: golden.len(),
                actual: v.as_ref().len(),
            });
        }
    }
    Ok(approx_error_unchecked(members.iter().map(AsRef::as_ref), golden))
}

pub(crate) fn approx_error_unchecked<'a>(members: impl Iterator<Item = &'a [f64]>, golden: &[f64]) -> f64 {
    members
        .map(|f| f.iter().zip(golden).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .fold(f64::INFINITY, f64::min)
}

/// NDCG@k of `predicted` (item indices, best first) under graded `relevance`.
///
/// Gains are `2^rel - 1`, discounts `log2(position + 1)`. A list whose top-k
/// ideal gain is zero scores 1.
pub fn ndcg_at_k(predicted: &[usize], relevance: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > predicted.len() {
        return Err(Error::config("k", "must lie in [1, list length]"));
    }
    if let Some(&bad) = predicted.iter().find(|&&i| i >= relevance.len()) {
        return Err(Error::OutOfBounds {
            index: bad,
            value: bad as f64,
            lower: 0.0,
            upper: relevance.len() as f64 - 1.0,
        });
    }
    let dcg = |order: &mut dyn Iterator<Item = f64>| -> f64 {
        order
            .take(k)
            .enumerate()
            .map(|(pos, rel)| (rel.exp2() - 1.0) / ((pos + 2) as f64).log2())
            .sum()
    };
    let mut ideal: Vec<f64> = relevance.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg = dcg(&mut ideal.into_iter());
    if idcg == 0.0 {
        return Ok(1.0);
    }
    Ok(dcg(&mut predicted.iter().map(|&i| relevance[i])) / idcg)
}

/// Relevance grades from a truth ordering: `L - rank` with rank 1 the best.
pub fn grades_from_order(truth_order: &[usize]) -> Vec<f64> {
    let l = truth_order.len();
    let mut rel = vec![0.0; l];
    for (pos, &item) in truth_order.iter().enumerate() {
        rel[item] = (l - (pos + 1)) as f64;
    }
    rel
}

/// Midranks (1-based) of `values`.
fn midranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Sample sizes up to this use the exact null distribution.
pub const EXACT_LIMIT: usize = 12;

/// Two-sided Wilcoxon signed-rank p-value for paired samples.
///
/// Zero differences are dropped. With at most [`EXACT_LIMIT`] remaining
/// pairs the p-value is exact (ties handled through doubled midranks);
/// above that the normal approximation with tie and continuity corrections
/// is used. All-zero differences give `p = 1`.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Ok(1.0);
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks = midranks(&abs);
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    if n <= EXACT_LIMIT {
        return Ok(exact_signed_rank_p(&ranks, w_plus));
    }
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0;
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        var -= (t * t * t - t) / 48.0;
        i = j + 1;
    }
    if var <= 0.0 {
        return Ok(1.0);
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(two_sided_normal(z))
}

/// Exact two-sided p-value of `W+` by dynamic programming over sign
/// assignments; ranks are doubled so midranks stay integral.
fn exact_signed_rank_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let all = 2f64.powi(ranks.len() as i32);
    let observed = (2.0 * w_plus).round() as usize;
    let mirrored = total - observed;
    let (lo, hi) = (observed.min(mirrored), observed.max(mirrored));
    let tail: f64 = counts[..=lo].iter().sum::<f64>() + counts[hi..].iter().sum::<f64>();
    (tail / all).min(1.0)
}

/// Two-sided Wilcoxon rank-sum (Mann–Whitney) p-value, normal approximation
/// with tie and continuity corrections.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("sample"));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let r1: f64 = ranks[..a.len()].iter().sum();
    let u = r1 - n1 * (n1 + 1.0) / 2.0;
    let mean = n1 * n2 / 2.0;
    let n = n1 + n2;
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    let var = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if var <= 0.0 {
        return Ok(1.0);
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(two_sided_normal(z))
}

fn two_sided_normal(z: f64) -> f64 {
    let normal = Normal::standard();
    (2.0 * (1.0 - normal.cdf(z))).clamp(0.0, 1.0)
}

/// Two-sided exact sign test: `wins` successes out of `trials` fair coin flips.
pub fn sign_test(wins: usize, trials: usize) -> f64 {
    if trials == 0 {
        return 1.0;
    }
    let k = wins.min(trials - wins);
    let mut tail = 0.0;
    let mut coef = 1.0f64;
    for i in 0..=k {
        if i > 0 {
            coef = coef * (trials - i + 1) as f64 / i as f64;
        }
        tail += coef;
    }
    (2.0 * tail / 2f64.powi(trials as i32)).min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl Magnitude {
    pub fn of(a12: f64) -> Self {
        let d = a12.max(1.0 - a12);
        if d < 0.56 {
            Magnitude::Negligible
        } else if d < 0.64 {
            Magnitude::Small
        } else if d < 0.71 {
            Magnitude::Medium
        } else {
            Magnitude::Large
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Magnitude::Negligible => "negligible",
            Magnitude::Small => "small",
            Magnitude::Medium => "medium",
            Magnitude::Large => "large",
        }
    }
}

/// Vargha–Delaney A12 under minimization: the probability that a value
/// from `a` is smaller than one from `b`, ties counting half.
pub fn a12(a: &[f64], b: &[f64]) -> Result<(f64, Magnitude)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("sample"));
    }
    let mut wins = 0.0;
    for x in a {
        for y in b {
            if x < y {
                wins += 1.0;
            } else if x == y {
                wins += 0.5;
            }
        }
    }
    let v = wins / (a.len() * b.len()) as f64;
    Ok((v, Magnitude::of(v)))
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Linear-interpolation quantile (type 7).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// One group's Scott–Knott outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedGroup {
    pub label: String,
    pub rank: usize,
    pub mean: f64,
    pub median: f64,
}

/// Scott–Knott clustering of labelled samples (lower is better).
///
/// Groups are sorted by mean and split recursively at the point maximizing
/// the between-cluster sum of squares. A split stands when the two sides
/// differ by the rank-sum test at 0.05 and their A12 is at least small.
/// Output follows the mean order; ranks are contiguous from 1.
pub fn scott_knott(samples: &[(String, Vec<f64>)]) -> Result<Vec<RankedGroup>> {
    if samples.is_empty() {
        return Err(Error::Empty("sample groups"));
    }
    if let Some((label, _)) = samples.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::config("samples", format!("group {label:?} is empty")));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let means: Vec<f64> = samples.iter().map(|(_, v)| mean(v)).collect();
    order.sort_by(|&a, &b| means[a].total_cmp(&means[b]).then(a.cmp(&b)));
    let mut cuts = Vec::new();
    split(samples, &order, 0, order.len(), &mut cuts);
    cuts.sort_unstable();
    let mut rank = 1;
    let mut out = Vec::with_capacity(order.len());
    for (pos, &g) in order.iter().enumerate() {
        if cuts.contains(&pos) {
            rank += 1;
        }
        out.push(RankedGroup {
            label: samples[g].0.clone(),
            rank,
            mean: means[g],
            median: median(&samples[g].1),
        });
    }
    Ok(out)
}

fn split(samples: &[(String, Vec<f64>)], order: &[usize], lo: usize, hi: usize, cuts: &mut Vec<usize>) {
    if hi - lo < 2 {
        return;
    }
    let values = |range: &[usize]| -> Vec<f64> { range.iter().flat_map(|&g| samples[g].1.iter().copied()).collect() };
    let all = values(&order[lo..hi]);
    let grand = mean(&all);
    let mut best: Option<(f64, usize)> = None;
    for cut in lo + 1..hi {
        let left = values(&order[lo..cut]);
        let right = values(&order[cut..hi]);
        let ss =
            left.len() as f64 * (mean(&left) - grand).powi(2) + right.len() as f64 * (mean(&right) - grand).powi(2);
        if best.is_none_or(|(b, _)| ss > b) {
            best = Some((ss, cut));
        }
    }
    let Some((_, cut)) = best else { return };
    let left = values(&order[lo..cut]);
    let right = values(&order[cut..hi]);
    let p = wilcoxon_rank_sum(&left, &right).unwrap_or(1.0);
    let effect = a12(&left, &right).map(|(_, m)| m).unwrap_or(Magnitude::Negligible);
    if p < 0.05 && effect != Magnitude::Negligible {
        cuts.push(cut);
        split(samples, order, lo, cut, cuts);
        split(samples, order, cut, hi, cuts);
    }
}
