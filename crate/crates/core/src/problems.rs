//! Benchmark problem families: DTLZ1–6, their inverted (negated) variants,
//! mDTLZ1–4 and WFG3.
//!
//! Every family maps a decision vector `x` onto an objective vector to be
//! minimized. Besides evaluation, each family knows its Pareto front (PF)
//! well enough to sample it and to locate the point preferred by a weighted
//! Tchebycheff decision maker (the "golden point").

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ObjectiveVector = Vec<f64>;

const DTLZ4_ALPHA: f64 = 100.0;
const WFG3_DISTANCE_PARAMS: usize = 20;
/// Monte-Carlo resolution for the off-segment part of the WFG3 golden-point search.
pub const WFG3_GOLDEN_SAMPLES: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Dtlz1,
    Dtlz2,
    Dtlz3,
    Dtlz4,
    Dtlz5,
    Dtlz6,
    Dtlz1Inv,
    Dtlz2Inv,
    Dtlz3Inv,
    Dtlz4Inv,
    Mdtlz1,
    Mdtlz2,
    Mdtlz3,
    Mdtlz4,
    Wfg3,
}

impl Family {
    pub const ALL: [Family; 15] = [
        Family::Dtlz1,
        Family::Dtlz2,
        Family::Dtlz3,
        Family::Dtlz4,
        Family::Dtlz5,
        Family::Dtlz6,
        Family::Dtlz1Inv,
        Family::Dtlz2Inv,
        Family::Dtlz3Inv,
        Family::Dtlz4Inv,
        Family::Mdtlz1,
        Family::Mdtlz2,
        Family::Mdtlz3,
        Family::Mdtlz4,
        Family::Wfg3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Dtlz1 => "dtlz1",
            Family::Dtlz2 => "dtlz2",
            Family::Dtlz3 => "dtlz3",
            Family::Dtlz4 => "dtlz4",
            Family::Dtlz5 => "dtlz5",
            Family::Dtlz6 => "dtlz6",
            Family::Dtlz1Inv => "dtlz1inv",
            Family::Dtlz2Inv => "dtlz2inv",
            Family::Dtlz3Inv => "dtlz3inv",
            Family::Dtlz4Inv => "dtlz4inv",
            Family::Mdtlz1 => "mdtlz1",
            Family::Mdtlz2 => "mdtlz2",
            Family::Mdtlz3 => "mdtlz3",
            Family::Mdtlz4 => "mdtlz4",
            Family::Wfg3 => "wfg3",
        }
    }

    /// Default number of decision variables for `m` objectives.
    pub fn default_n(self, m: usize) -> usize {
        match self {
            Family::Dtlz1 | Family::Dtlz1Inv | Family::Mdtlz1 => m + 4,
            Family::Wfg3 => wfg3_position_params(m) + WFG3_DISTANCE_PARAMS,
            _ => m + 9,
        }
    }

    fn is_mdtlz(self) -> bool {
        matches!(self, Family::Mdtlz1 | Family::Mdtlz2 | Family::Mdtlz3 | Family::Mdtlz4)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Family::ALL
            .into_iter()
            .find(|f| f.name() == lower)
            .ok_or_else(|| Error::config("problem", format!("unknown problem `{s}`")))
    }
}

fn wfg3_position_params(m: usize) -> usize {
    2 * (m - 1)
}

/// A benchmark instance: family, objective count, decision dimension and box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub family: Family,
    pub m: usize,
    pub n: usize,
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemMeta {
    pub ideal: ObjectiveVector,
    pub nadir: Option<ObjectiveVector>,
}

impl ProblemSpec {
    pub fn new(family: Family, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::config("m", "at least two objectives are required"));
        }
        Self::with_n(family, m, family.default_n(m))
    }

    pub fn with_n(family: Family, m: usize, n: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::config("m", "at least two objectives are required"));
        }
        if family.is_mdtlz() && m != 3 {
            return Err(Error::config("m", "the mDTLZ family is defined for m = 3"));
        }
        if n < m {
            return Err(Error::config(
                "n",
                format!("need at least m = {m} decision variables (m - 1 position + distance)"),
            ));
        }
        let bounds = match family {
            Family::Wfg3 => {
                let k = wfg3_position_params(m);
                if n <= k || !(n - k).is_multiple_of(2) {
                    return Err(Error::config(
                        "n",
                        format!("WFG3 needs n = {k} + l with an even, positive l"),
                    ));
                }
                (0..n).map(|i| (0.0, 2.0 * (i + 1) as f64)).collect()
            }
            _ => vec![(0.0, 1.0); n],
        };
        Ok(Self { family, m, n, bounds })
    }

    /// Canonical instance name, e.g. `dtlz2-m3`.
    pub fn id(&self) -> String {
        format!("{}-m{}", self.family, self.m)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<ObjectiveVector> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        for (index, (&value, &(lower, upper))) in x.iter().zip(&self.bounds).enumerate() {
            if !(lower..=upper).contains(&value) {
                return Err(Error::OutOfBounds {
                    index,
                    value,
                    lower,
                    upper,
                });
            }
        }
        Ok(self.evaluate_unchecked(x))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[f64]) -> ObjectiveVector {
        let m = self.m;
        let (pos, dist) = x.split_at(m - 1);
        match self.family {
            Family::Dtlz1 => dtlz1(pos, dist),
            Family::Dtlz2 => dtlz2_like(pos, g_sphere(dist), 1.0),
            Family::Dtlz3 => dtlz2_like(pos, g_rastrigin(dist), 1.0),
            Family::Dtlz4 => dtlz2_like(pos, g_sphere(dist), DTLZ4_ALPHA),
            Family::Dtlz5 => dtlz5_like(pos, g_sphere(dist)),
            Family::Dtlz6 => dtlz5_like(pos, dist.iter().map(|v| v.powf(0.1)).sum()),
            Family::Dtlz1Inv => negate(dtlz1(pos, dist)),
            Family::Dtlz2Inv => negate(dtlz2_like(pos, g_sphere(dist), 1.0)),
            Family::Dtlz3Inv => negate(dtlz2_like(pos, g_rastrigin(dist), 1.0)),
            Family::Dtlz4Inv => negate(dtlz2_like(pos, g_sphere(dist), DTLZ4_ALPHA)),
            Family::Mdtlz1 => mdtlz1(pos, dist),
            Family::Mdtlz2 => mdtlz2_like(pos, dist, g_sphere, 1.0),
            Family::Mdtlz3 => mdtlz2_like(pos, dist, g_rastrigin, 1.0),
            Family::Mdtlz4 => mdtlz2_like(pos, dist, g_sphere, DTLZ4_ALPHA),
            Family::Wfg3 => wfg3(x, m),
        }
    }

    pub fn meta(&self) -> ProblemMeta {
        let m = self.m;
        match self.family {
            Family::Dtlz1 | Family::Mdtlz1 => ProblemMeta {
                ideal: vec![0.0; m],
                nadir: Some(vec![0.5; m]),
            },
            Family::Dtlz2 | Family::Dtlz3 | Family::Dtlz4 => ProblemMeta {
                ideal: vec![0.0; m],
                nadir: Some(vec![1.0; m]),
            },
            Family::Mdtlz2 | Family::Mdtlz3 | Family::Mdtlz4 => ProblemMeta {
                ideal: vec![0.0; m],
                nadir: Some(vec![1.0; m]),
            },
            Family::Dtlz5 | Family::Dtlz6 => ProblemMeta {
                ideal: vec![0.0; m],
                nadir: None,
            },
            Family::Dtlz1Inv | Family::Dtlz2Inv | Family::Dtlz3Inv | Family::Dtlz4Inv => {
                let radius = self.inverted_radius();
                ProblemMeta {
                    ideal: vec![-radius; m],
                    nadir: Some(vec![0.0; m]),
                }
            }
            Family::Wfg3 => ProblemMeta {
                ideal: vec![0.0; m],
                nadir: Some((1..=m).map(|i| 2.0 * i as f64).collect()),
            },
        }
    }

    /// Value of each distance variable that places a solution on the PF.
    fn optimal_distance_value(&self) -> f64 {
        match self.family {
            Family::Dtlz6 => 0.0,
            Family::Dtlz1Inv | Family::Dtlz3Inv => rastrigin_term_argmax(),
            Family::Dtlz2Inv | Family::Dtlz4Inv => 0.0,
            _ => 0.5,
        }
    }

    fn distance_count(&self) -> usize {
        self.n - (self.m - 1)
    }

    /// Scale of the negated front: Σf = -radius (DTLZ1⁻¹) or ‖f‖ = radius (DTLZ2–4⁻¹).
    fn inverted_radius(&self) -> f64 {
        let k = self.distance_count() as f64;
        match self.family {
            Family::Dtlz1Inv => {
                let h = rastrigin_term(rastrigin_term_argmax());
                0.5 * (1.0 + 100.0 * (k + k * h))
            }
            Family::Dtlz3Inv => {
                let h = rastrigin_term(rastrigin_term_argmax());
                1.0 + 100.0 * (k + k * h)
            }
            Family::Dtlz2Inv | Family::Dtlz4Inv => 1.0 + 0.25 * k,
            _ => 1.0,
        }
    }

    /// Deviation of `f` from the family's PF identity, when one exists.
    ///
    /// Linear fronts report `Σf - c`, spherical fronts `Σf² - r²` and the
    /// mDTLZ fronts the corresponding identity on `1 - f`.
    pub fn pf_residual(&self, f: &[f64]) -> Option<f64> {
        let sum: f64 = f.iter().sum();
        let sq: f64 = f.iter().map(|v| v * v).sum();
        let m = self.m as f64;
        Some(match self.family {
            Family::Dtlz1 => sum - 0.5,
            Family::Dtlz2 | Family::Dtlz3 | Family::Dtlz4 | Family::Dtlz5 | Family::Dtlz6 => sq - 1.0,
            Family::Dtlz1Inv => sum + self.inverted_radius(),
            Family::Dtlz2Inv | Family::Dtlz3Inv | Family::Dtlz4Inv => sq - self.inverted_radius().powi(2),
            Family::Mdtlz1 => sum - 0.5 * (m - 1.0),
            Family::Mdtlz2 | Family::Mdtlz3 | Family::Mdtlz4 => f.iter().map(|v| (1.0 - v).powi(2)).sum::<f64>() - 1.0,
            Family::Wfg3 => {
                f.iter()
                    .enumerate()
                    .map(|(i, v)| v / (2.0 * (i + 1) as f64))
                    .sum::<f64>()
                    - 1.0
            }
        })
    }

    /// A decision vector on the PF with the given position parameters in `[0, 1]`.
    fn pf_decision(&self, position: &[f64]) -> Vec<f64> {
        match self.family {
            Family::Wfg3 => {
                let k = wfg3_position_params(self.m);
                let mut z: Vec<f64> = (0..self.n).map(|i| 2.0 * (i + 1) as f64 * 0.35).collect();
                let per_group = k / (self.m - 1);
                for (group, &p) in position.iter().enumerate() {
                    for i in group * per_group..(group + 1) * per_group {
                        z[i] = 2.0 * (i + 1) as f64 * p;
                    }
                }
                z
            }
            _ => {
                let mut x = position.to_vec();
                x.resize(self.n, self.optimal_distance_value());
                x
            }
        }
    }

    /// `count` PF points from uniformly drawn position parameters.
    pub fn sample_pf(&self, count: usize, seed: u64) -> Result<Vec<ObjectiveVector>> {
        if count == 0 {
            return Err(Error::Empty("sample count"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..count)
            .map(|_| {
                let position: Vec<f64> = (0..self.m - 1).map(|_| rng.random::<f64>()).collect();
                self.evaluate_unchecked(&self.pf_decision(&position))
            })
            .collect())
    }

    /// The PF point minimizing `max_i f_i / w_i` (Tchebycheff value with the
    /// origin as reference point).
    pub fn golden_point(&self, w_star: &[f64]) -> Result<ObjectiveVector> {
        if w_star.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                actual: w_star.len(),
            });
        }
        if w_star.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::config("w_star", "weights must be strictly positive"));
        }
        let w_sum: f64 = w_star.iter().sum();
        let w_norm = w_star.iter().map(|w| w * w).sum::<f64>().sqrt();
        Ok(match self.family {
            Family::Dtlz1 => w_star.iter().map(|w| 0.5 * w / w_sum).collect(),
            Family::Dtlz2 | Family::Dtlz3 | Family::Dtlz4 => w_star.iter().map(|w| w / w_norm).collect(),
            Family::Dtlz1Inv => {
                let r = self.inverted_radius();
                w_star.iter().map(|w| -r * w / w_sum).collect()
            }
            Family::Dtlz2Inv | Family::Dtlz3Inv | Family::Dtlz4Inv => {
                let r = self.inverted_radius();
                w_star.iter().map(|w| -r * w / w_norm).collect()
            }
            Family::Dtlz5 | Family::Dtlz6 => self.degenerate_curve_golden(w_star),
            Family::Mdtlz1 => {
                let s = water_fill(w_star, |s| s.iter().sum());
                s.iter().map(|v| 0.5 * (1.0 - v)).collect()
            }
            Family::Mdtlz2 | Family::Mdtlz3 | Family::Mdtlz4 => {
                let s = water_fill(w_star, |s| s.iter().map(|v| v * v).sum::<f64>().sqrt());
                s.iter().map(|v| 1.0 - v).collect()
            }
            Family::Wfg3 => self.wfg3_golden(w_star),
        })
    }

    /// DTLZ5/6 fronts are a curve parametrized by the first angle; every
    /// objective but the last scales with `cos θ`, the last is `sin θ`.
    fn degenerate_curve_golden(&self, w: &[f64]) -> ObjectiveVector {
        let m = self.m;
        let mut angles = vec![FRAC_PI_4; m - 1];
        angles[0] = 0.0;
        let at_zero = spherical_shape(&angles);
        let a = (0..m - 1).map(|i| at_zero[i] / w[i]).fold(f64::MIN, f64::max);
        let b = 1.0 / w[m - 1];
        let theta = a.atan2(b);
        let mut position = vec![0.5; m - 1];
        position[0] = theta / FRAC_PI_2;
        self.evaluate_unchecked(&self.pf_decision(&position))
    }

    /// WFG3: closed-form optimum on the degenerate segment, then a fixed-seed
    /// Monte-Carlo sweep over solutions off the segment (nonzero distance
    /// transformation), keeping whichever has the smallest Tchebycheff value.
    fn wfg3_golden(&self, w: &[f64]) -> ObjectiveVector {
        let m = self.m;
        // On the segment x_2..x_{m-1} = 0.5, objectives 1..m-1 grow linearly
        // with the first position parameter p and the last falls as (1 - p).
        let mut shape_at_one = vec![0.5; m - 1];
        shape_at_one[0] = 1.0;
        let h = linear_shape(&shape_at_one);
        let a = (0..m - 1)
            .map(|i| 2.0 * (i + 1) as f64 * h[i] / w[i])
            .fold(f64::MIN, f64::max);
        let b = 2.0 * m as f64 / w[m - 1];
        let p = b / (a + b);
        let mut position = vec![0.5; m - 1];
        position[0] = p;
        let mut best = self.evaluate_unchecked(&self.pf_decision(&position));
        let mut best_value = tchebycheff_origin(&best, w);

        let mut rng = ChaCha8Rng::seed_from_u64(0x5746_4733);
        let k = wfg3_position_params(m);
        for _ in 0..WFG3_GOLDEN_SAMPLES {
            let z: Vec<f64> = (0..self.n)
                .map(|i| {
                    let upper = 2.0 * (i + 1) as f64;
                    if i < k {
                        upper * rng.random::<f64>()
                    } else {
                        // y in [0.35, 0.45] keeps the distance term small
                        upper * (0.35 + 0.1 * rng.random::<f64>())
                    }
                })
                .collect();
            let f = self.evaluate_unchecked(&z);
            let v = tchebycheff_origin(&f, w);
            if v < best_value {
                best_value = v;
                best = f;
            }
        }
        best
    }
}

fn tchebycheff_origin(f: &[f64], w: &[f64]) -> f64 {
    f.iter().zip(w).map(|(fi, wi)| fi.abs() / wi).fold(f64::MIN, f64::max)
}

/// Smallest `t` with `level(max(0, 1 - t w)) <= 1`, returned as the point
/// `s = max(0, 1 - t w)`; used for fronts of the form `f = c (1 - s)`.
fn water_fill(w: &[f64], level: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let point = |t: f64| -> Vec<f64> { w.iter().map(|wi| (1.0 - t * wi).max(0.0)).collect() };
    let (mut lo, mut hi) = (0.0, 1.0 / w.iter().cloned().fold(f64::MAX, f64::min));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if level(&point(mid)) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = point(hi);
    let l = level(&s);
    s.into_iter().map(|v| v / l).collect()
}

fn negate(mut f: ObjectiveVector) -> ObjectiveVector {
    f.iter_mut().for_each(|v| *v = -*v);
    f
}

fn rastrigin_term(x: f64) -> f64 {
    let y = x - 0.5;
    y * y - (20.0 * PI * y).cos()
}

/// Argmax of one DTLZ1 distance term on [0, 1], found by golden-section
/// search on [0, 0.1] where the term is unimodal (the mirror at 0.95 ties).
fn rastrigin_term_argmax() -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, 0.1);
    for _ in 0..200 {
        let c = b - ratio * (b - a);
        let d = a + ratio * (b - a);
        if rastrigin_term(c) > rastrigin_term(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

fn g_sphere(dist: &[f64]) -> f64 {
    dist.iter().map(|v| (v - 0.5).powi(2)).sum()
}

fn g_rastrigin(dist: &[f64]) -> f64 {
    100.0 * (dist.len() as f64 + dist.iter().map(|&v| rastrigin_term(v)).sum::<f64>())
}

/// `s_i = x_1 ⋯ x_{m-1-i} (1 - x_{m-i})`; sums to one.
fn linear_shape(pos: &[f64]) -> Vec<f64> {
    let m = pos.len() + 1;
    (0..m)
        .map(|i| {
            let mut v: f64 = pos[..m - 1 - i].iter().product();
            if i > 0 {
                v *= 1.0 - pos[m - 1 - i];
            }
            v
        })
        .collect()
}

/// `s_i = cos θ_1 ⋯ cos θ_{m-1-i} sin θ_{m-i}`; unit Euclidean norm.
fn spherical_shape(angles: &[f64]) -> Vec<f64> {
    let m = angles.len() + 1;
    (0..m)
        .map(|i| {
            let mut v: f64 = angles[..m - 1 - i].iter().map(|a| a.cos()).product();
            if i > 0 {
                v *= angles[m - 1 - i].sin();
            }
            v
        })
        .collect()
}

// f_i = 0.5 (1 + g) s_i with the linear shape and the multimodal g.
fn dtlz1(pos: &[f64], dist: &[f64]) -> ObjectiveVector {
    let scale = 0.5 * (1.0 + g_rastrigin(dist));
    linear_shape(pos).into_iter().map(|s| scale * s).collect()
}

// f_i = (1 + g) s_i with the spherical shape over θ_j = x_j^α π/2.
fn dtlz2_like(pos: &[f64], g: f64, alpha: f64) -> ObjectiveVector {
    let angles: Vec<f64> = pos.iter().map(|x| x.powf(alpha) * FRAC_PI_2).collect();
    spherical_shape(&angles).into_iter().map(|s| (1.0 + g) * s).collect()
}

// θ_1 = x_1 π/2, θ_j = π (1 + 2 g x_j) / (4 (1 + g)) for j ≥ 2.
fn dtlz5_like(pos: &[f64], g: f64) -> ObjectiveVector {
    let angles: Vec<f64> = pos
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            if j == 0 {
                x * FRAC_PI_2
            } else {
                PI / (4.0 * (1.0 + g)) * (1.0 + 2.0 * g * x)
            }
        })
        .collect();
    spherical_shape(&angles).into_iter().map(|s| (1.0 + g) * s).collect()
}

/// Distance variables are dealt round-robin to the objectives: objective
/// `i` owns distance indices `i, i + m, i + 2m, ...`.
fn mdtlz_groups(dist: &[f64], m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|i| dist.iter().skip(i).step_by(m).copied().collect())
        .collect()
}

// f_i = 0.5 (1 + g_i) (1 - s_i), each g_i the multimodal g over its own group.
fn mdtlz1(pos: &[f64], dist: &[f64]) -> ObjectiveVector {
    let m = pos.len() + 1;
    let groups = mdtlz_groups(dist, m);
    linear_shape(pos)
        .into_iter()
        .zip(groups)
        .map(|(s, group)| 0.5 * (1.0 + g_rastrigin(&group)) * (1.0 - s))
        .collect()
}

// f_i = (1 + g_i) (1 - s_i) with the spherical shape over θ_j = x_j^α π/2.
fn mdtlz2_like(pos: &[f64], dist: &[f64], g: fn(&[f64]) -> f64, alpha: f64) -> ObjectiveVector {
    let m = pos.len() + 1;
    let angles: Vec<f64> = pos.iter().map(|x| x.powf(alpha) * FRAC_PI_2).collect();
    spherical_shape(&angles)
        .into_iter()
        .zip(mdtlz_groups(dist, m))
        .map(|(s, group)| (1.0 + g(&group)) * (1.0 - s))
        .collect()
}

fn s_linear(y: f64, a: f64) -> f64 {
    (y - a).abs() / ((a - y).floor() + a).abs()
}

fn r_nonsep_pair(y0: f64, y1: f64) -> f64 {
    (y0 + y1 + 2.0 * (y0 - y1).abs()) / 3.0
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// WFG3 with k = 2(m - 1) position parameters: linear shift on the distance
/// parameters, pairwise non-separable reduction, weighted-sum reduction to
/// m parameters, degenerate linear shape (A_1 = 1, A_{2..m-1} = 0) and
/// scaling S_i = 2i.
fn wfg3(z: &[f64], m: usize) -> ObjectiveVector {
    let k = wfg3_position_params(m);
    let l = z.len() - k;
    let y: Vec<f64> = z.iter().enumerate().map(|(i, v)| v / (2.0 * (i + 1) as f64)).collect();
    let t1: Vec<f64> = y
        .iter()
        .enumerate()
        .map(|(i, &v)| if i < k { v } else { s_linear(v, 0.35) })
        .collect();
    let mut t2: Vec<f64> = t1[..k].to_vec();
    t2.extend((0..l / 2).map(|j| r_nonsep_pair(t1[k + 2 * j], t1[k + 2 * j + 1])));
    let per_group = k / (m - 1);
    let mut t3: Vec<f64> = (0..m - 1)
        .map(|i| mean(&t2[i * per_group..(i + 1) * per_group]))
        .collect();
    t3.push(mean(&t2[k..]));

    let dist = t3[m - 1];
    let x: Vec<f64> = (0..m - 1)
        .map(|i| {
            let a = if i == 0 { 1.0 } else { 0.0 };
            dist.max(a) * (t3[i] - 0.5) + 0.5
        })
        .collect();
    linear_shape(&x)
        .into_iter()
        .enumerate()
        .map(|(i, h)| dist + 2.0 * (i + 1) as f64 * h)
        .collect()
}
