//! Weight-vector generation and preference-driven weight adjustment.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ltr::PreferenceModel;

pub type WeightVector = Vec<f64>;

/// Every simplex lattice point with denominator `divisions`.
pub fn das_dennis(m: usize, divisions: usize) -> Result<Vec<WeightVector>> {
    if m == 0 {
        return Err(Error::config("m", "must be positive"));
    }
    if divisions == 0 {
        return Err(Error::config("divisions", "must be at least 1"));
    }
    let mut out = Vec::new();
    let mut current = vec![0usize; m];
    lattice(&mut current, 0, divisions, divisions, &mut out);
    Ok(out)
}

fn lattice(current: &mut [usize], pos: usize, left: usize, h: usize, out: &mut Vec<WeightVector>) {
    if pos + 1 == current.len() {
        current[pos] = left;
        out.push(current.iter().map(|&c| c as f64 / h as f64).collect());
        return;
    }
    for c in (0..=left).rev() {
        current[pos] = c;
        lattice(current, pos + 1, left - c, h, out);
    }
}

/// `C(n, k)` in floating point; used for lattice sizing.
pub fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Per-coordinate box constraints on a weight vector.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl WeightBounds {
    pub fn unit(m: usize) -> Self {
        Self {
            lower: vec![0.0; m],
            upper: vec![1.0; m],
        }
    }

    fn check(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() || self.lower.is_empty() {
            return Err(Error::InfeasibleBounds("bounds must have equal, nonzero length".into()));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l <= u) || *l < 0.0) {
            return Err(Error::InfeasibleBounds("need 0 <= lower <= upper".into()));
        }
        let lo: f64 = self.lower.iter().sum();
        let hi: f64 = self.upper.iter().sum();
        if lo > 1.0 + 1e-12 || hi < 1.0 - 1e-12 {
            return Err(Error::InfeasibleBounds(format!(
                "simplex slice is empty: sum(lower) = {lo}, sum(upper) = {hi}"
            )));
        }
        Ok(())
    }

    /// A point strictly inside the slice whenever the slice has interior.
    fn interior_point(&self) -> Vec<f64> {
        let slack: f64 = 1.0 - self.lower.iter().sum::<f64>();
        let room: f64 = self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).sum();
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| if room > 0.0 { l + slack * (u - l) / room } else { *l })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HitAndRun {
    pub burn_in: usize,
    pub thinning: usize,
}

impl Default for HitAndRun {
    fn default() -> Self {
        Self {
            burn_in: 1000,
            thinning: 10,
        }
    }
}

impl HitAndRun {
    /// Thinning grows as `m²` so the chain still mixes on larger simplices;
    /// up to three objectives this equals the default.
    pub fn for_dimension(m: usize) -> Self {
        Self {
            thinning: (m * m).max(10),
            ..Self::default()
        }
    }

    /// `count` approximately uniform points on `{w : Σw = 1, lower ≤ w ≤ upper}`.
    pub fn sample(&self, bounds: &WeightBounds, count: usize, seed: u64) -> Result<Vec<WeightVector>> {
        bounds.check()?;
        let m = bounds.lower.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = bounds.interior_point();
        if m == 1 {
            return Ok(vec![x; count]);
        }
        let thinning = self.thinning.max(1);
        let mut out = Vec::with_capacity(count);
        let mut dir = vec![0.0; m];
        let mut step = 0usize;
        while out.len() < count {
            self.move_once(bounds, &mut x, &mut dir, &mut rng);
            step += 1;
            if step > self.burn_in && (step - self.burn_in).is_multiple_of(thinning) {
                out.push(x.clone());
            }
        }
        Ok(out)
    }

    fn move_once(&self, bounds: &WeightBounds, x: &mut [f64], dir: &mut [f64], rng: &mut ChaCha8Rng) {
        let m = x.len();
        loop {
            for d in dir.iter_mut() {
                *d = rng.sample(StandardNormal);
            }
            let mean = dir.iter().sum::<f64>() / m as f64;
            dir.iter_mut().for_each(|d| *d -= mean);
            let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
            if norm > 1e-12 {
                dir.iter_mut().for_each(|d| *d /= norm);
                break;
            }
        }
        let (mut t_lo, mut t_hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..m {
            let d = dir[k];
            if d.abs() < 1e-15 {
                continue;
            }
            let a = (bounds.lower[k] - x[k]) / d;
            let b = (bounds.upper[k] - x[k]) / d;
            t_lo = t_lo.max(a.min(b));
            t_hi = t_hi.min(a.max(b));
        }
        if !(t_hi > t_lo) {
            return;
        }
        let t = rng.random_range(t_lo..t_hi);
        for k in 0..m {
            x[k] = (x[k] + t * dir[k]).clamp(bounds.lower[k], bounds.upper[k]);
        }
        renormalize(x);
    }
}

/// Clip negatives and rescale onto the unit simplex.
pub fn renormalize(w: &mut [f64]) {
    w.iter_mut().for_each(|v| *v = v.max(0.0));
    let s: f64 = w.iter().sum();
    if s > 0.0 {
        w.iter_mut().for_each(|v| *v /= s);
    } else {
        let u = 1.0 / w.len() as f64;
        w.iter_mut().for_each(|v| *v = u);
    }
}

/// Indices of `utilities` sorted by descending utility; ties keep input order.
pub fn utility_truncation_order(utilities: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..utilities.len()).collect();
    idx.sort_by(|&a, &b| utilities[b].total_cmp(&utilities[a]));
    idx
}

/// Weight indices associated with the `mu` best solutions, duplicates
/// dropped, in descending-utility priority order.
pub fn promising_weights(utilities: &[f64], association: &[usize], mu: usize) -> Result<Vec<usize>> {
    if utilities.len() != association.len() {
        return Err(Error::DimensionMismatch {
            expected: utilities.len(),
            actual: association.len(),
        });
    }
    if mu == 0 {
        return Err(Error::config("mu", "must be at least 1"));
    }
    if mu > utilities.len() {
        log::warn!("mu = {mu} exceeds population size {}; clamping", utilities.len());
    }
    let mut out: Vec<usize> = Vec::new();
    for i in utility_truncation_order(utilities).into_iter().take(mu) {
        if !out.contains(&association[i]) {
            out.push(association[i]);
        }
    }
    Ok(out)
}

/// Moves non-promising vectors toward the promising ones.
///
/// Each promising vector, in priority order, claims its `⌈(N - μ′)/μ′⌉`
/// nearest unclaimed non-promising vectors, which step `eta` of the way
/// toward it. Distance ties go to the lower index.
pub fn attract(weights: &[WeightVector], promising: &[usize], eta: f64) -> Result<Vec<WeightVector>> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::config("eta_step", "must lie in [0, 1]"));
    }
    let n = weights.len();
    if let Some(&bad) = promising.iter().find(|&&p| p >= n) {
        return Err(Error::OutOfBounds {
            index: bad,
            value: bad as f64,
            lower: 0.0,
            upper: n as f64 - 1.0,
        });
    }
    let mut out = weights.to_vec();
    if promising.is_empty() {
        return Ok(out);
    }
    let mu = promising.len();
    let quota = (n - mu).div_ceil(mu);
    let mut claimed = vec![false; n];
    for &p in promising {
        claimed[p] = true;
    }
    for &p in promising {
        let attractor = &weights[p];
        let mut free: Vec<(f64, usize)> = (0..n)
            .filter(|&j| !claimed[j])
            .map(|j| (squared_distance(&weights[j], attractor), j))
            .collect();
        free.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in free.iter().take(quota) {
            claimed[j] = true;
            let w = &mut out[j];
            for (v, a) in w.iter_mut().zip(attractor) {
                *v += eta * (a - *v);
            }
            renormalize(w);
        }
    }
    Ok(out)
}

/// Scores the population with `model`, collects the promising weights and
/// attracts the rest of the set toward them.
pub fn adjust_weights(
    weights: &[WeightVector],
    objectives: &[&[f64]],
    association: &[usize],
    model: &PreferenceModel,
    mu: usize,
    eta: f64,
) -> Result<Vec<WeightVector>> {
    let utilities = objectives.iter().map(|f| model.score(f)).collect::<Result<Vec<_>>>()?;
    let promising = promising_weights(&utilities, association, mu)?;
    attract(weights, &promising, eta)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// One vector per row, comma separated.
pub fn write_csv<W: Write>(weights: &[WeightVector], mut out: W) -> Result<()> {
    for w in weights {
        let row: Vec<String> = w.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
