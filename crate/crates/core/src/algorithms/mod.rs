//! The three preference-guided algorithms and the consultation loop that
//! drives them.

mod moead;
mod nsga2;
mod r2ibea;

use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use moead::{neighborhoods, tchebycheff};
pub use r2ibea::{r2_association, r2_contributions, r2_indicator, r2_reduce};

use crate::elicitation::{HitAndRun, WeightBounds, WeightVector};
use crate::error::{Error, Result};
use crate::evo::{Population, Solution, VariationConfig};
use crate::ltr::{self, ComparisonRecord, Normalization, PreferenceModel, TrainConfig};
use crate::oracle::{self, golden_value_unchecked, DecisionMaker, Query};
use crate::problems::ProblemSpec;
use crate::seeding;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Insga2,
    Imoead,
    Ir2ibea,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Insga2, Algorithm::Imoead, Algorithm::Ir2ibea];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Insga2 => "insga2",
            Algorithm::Imoead => "imoead",
            Algorithm::Ir2ibea => "ir2ibea",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::config("algorithm", format!("unknown algorithm {s:?}")))
    }
}

/// Population size used when none is given: 100, or 120 / 220 for 8 / 10 objectives.
pub fn default_pop_size(m: usize) -> usize {
    match m {
        8 => 120,
        10 => 220,
        _ => 100,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub problem: ProblemSpec,
    pub pop_size: usize,
    pub max_fe: usize,
    /// Generations between consultations.
    pub tau: usize,
    /// Vanilla generations before the first consultation.
    pub warmup: usize,
    /// Candidates shown per consultation.
    pub mu: usize,
    pub eta_step: f64,
    /// With guidance off the DM is never consulted.
    pub guidance: bool,
    pub variation: VariationConfig,
    pub train: TrainConfig,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, problem: ProblemSpec) -> Self {
        let pop_size = default_pop_size(problem.m);
        let variation = VariationConfig::for_dimension(problem.n);
        Self {
            algorithm,
            problem,
            pop_size,
            max_fe: 300 * pop_size,
            tau: 10,
            warmup: 30,
            mu: 10,
            eta_step: 0.2,
            guidance: true,
            variation,
            train: TrainConfig::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 {
            return Err(Error::config("pop_size", "must be at least 2"));
        }
        if self.max_fe < self.pop_size {
            return Err(Error::config("max_fe", "must be at least pop_size"));
        }
        if self.tau < 2 {
            return Err(Error::config("tau", "must be greater than 1"));
        }
        if self.warmup < 1 {
            return Err(Error::config("warmup", "must be at least 1"));
        }
        if self.mu < 2 || self.mu > self.pop_size {
            return Err(Error::config("mu", "must lie in [2, pop_size]"));
        }
        if !(0.0..=1.0).contains(&self.eta_step) {
            return Err(Error::config("eta_step", "must lie in [0, 1]"));
        }
        self.variation.validate()?;
        self.train.validate()?;
        Ok(())
    }
}

/// The judgments gathered at one consultation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Consultation {
    pub generation: usize,
    pub records: Vec<ComparisonRecord>,
    /// Judgments reversed by oracle noise.
    pub flipped: usize,
}

/// One line of a run trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub generation: usize,
    pub fe: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_psi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
    pub consultation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub final_population: Population,
    pub consultations: Vec<Consultation>,
    pub trajectory: Vec<TraceRecord>,
    pub fe_used: usize,
    pub generations: usize,
    pub seed: u64,
    pub model: Option<PreferenceModel>,
    pub weights: Option<Vec<WeightVector>>,
    /// Why the run stopped early, if it did.
    pub aborted: Option<String>,
}

impl RunResult {
    pub fn records(&self) -> impl Iterator<Item = &ComparisonRecord> {
        self.consultations.iter().flat_map(|c| c.records.iter())
    }
}

/// Ground truth used only for tracing: the DM's utopia weights and golden point.
#[derive(Clone, Debug, PartialEq)]
pub struct Monitor {
    pub w_star: Vec<f64>,
    pub golden: Vec<f64>,
}

impl Monitor {
    pub fn new(problem: &ProblemSpec, w_star: Vec<f64>) -> Result<Self> {
        let golden = problem.golden_point(&w_star)?;
        Ok(Self { w_star, golden })
    }

    fn record(&self, pop: &[Solution], generation: usize, fe: usize, consultation: bool) -> TraceRecord {
        let zero = vec![0.0; self.w_star.len()];
        let best_psi = pop
            .iter()
            .map(|s| golden_value_unchecked(&s.f, &self.w_star, &zero))
            .fold(f64::INFINITY, f64::min);
        let error = crate::metrics::approx_error_unchecked(pop.iter().map(|s| s.f.as_slice()), &self.golden);
        TraceRecord {
            generation,
            fe,
            best_psi: Some(best_psi),
            error: Some(error),
            consultation,
        }
    }
}

/// State visible to a run observer after every generation.
pub struct Progress<'a> {
    pub generation: usize,
    pub fe_used: usize,
    pub population: &'a [Solution],
    pub consultations: &'a [Consultation],
    pub model: Option<&'a PreferenceModel>,
}

/// Shared evaluation context for the engines.
pub(crate) struct Context<'a> {
    pub problem: &'a ProblemSpec,
    pub variation: &'a VariationConfig,
    pub rng: ChaCha8Rng,
    pub fe: usize,
}

impl Context<'_> {
    pub fn evaluate(&mut self, x: Vec<f64>) -> Solution {
        self.fe += 1;
        let f = self.problem.evaluate_unchecked(&x);
        Solution::new(x, f)
    }

    fn random_solution(&mut self) -> Solution {
        let x = self
            .problem
            .bounds
            .iter()
            .map(|&(lo, hi)| lo + (hi - lo) * self.rng.random::<f64>())
            .collect();
        self.evaluate(x)
    }
}

pub(crate) trait Engine {
    fn population(&self) -> &[Solution];
    fn generation(&mut self, ctx: &mut Context<'_>);
    fn apply_model(&mut self, model: &PreferenceModel, mu: usize, eta_step: f64) -> Result<()>;
    fn weights(&self) -> Option<&[WeightVector]> {
        None
    }
}

fn build_engine(cfg: &RunConfig, initial: Vec<Solution>) -> Result<Box<dyn Engine>> {
    let n = cfg.pop_size;
    let weights = || {
        HitAndRun::for_dimension(cfg.problem.m).sample(
            &WeightBounds::unit(cfg.problem.m),
            n,
            seeding::derive(cfg.seed, &[0x57]),
        )
    };
    Ok(match cfg.algorithm {
        Algorithm::Insga2 => Box::new(nsga2::Nsga2::new(initial)),
        Algorithm::Imoead => Box::new(moead::Moead::new(initial, weights()?)),
        Algorithm::Ir2ibea => Box::new(r2ibea::R2Ibea::new(initial, weights()?)),
    })
}

/// Runs with the simulated or human `dm`; see [`run_observed`].
pub fn run<D: DecisionMaker + ?Sized>(cfg: &RunConfig, dm: &mut D, monitor: Option<&Monitor>) -> Result<RunResult> {
    run_observed(cfg, dm, monitor, &mut |_| ControlFlow::Continue(()))
}

/// Executes one interactive run.
///
/// Vanilla generations run until `warmup`; from then on, every `tau`
/// generations the DM answers all pairs over `mu` candidates, the model is
/// retrained from scratch on every judgment so far (inputs scaled by the
/// current population's objective ranges) and the algorithm's preference
/// structure is re-elicited. The run stops before a generation
/// would exceed `max_fe`. A DM failure or an observer break ends the run
/// early with `aborted` set.
pub fn run_observed<D: DecisionMaker + ?Sized>(
    cfg: &RunConfig,
    dm: &mut D,
    monitor: Option<&Monitor>,
    observer: &mut dyn FnMut(&Progress<'_>) -> ControlFlow<()>,
) -> Result<RunResult> {
    cfg.validate()?;
    let mut ctx = Context {
        problem: &cfg.problem,
        variation: &cfg.variation,
        rng: ChaCha8Rng::seed_from_u64(seeding::derive(cfg.seed, &[0x45])),
        fe: 0,
    };
    let initial: Vec<Solution> = (0..cfg.pop_size).map(|_| ctx.random_solution()).collect();
    let mut engine = build_engine(cfg, initial)?;
    let mut consultations: Vec<Consultation> = Vec::new();
    let mut records: Vec<ComparisonRecord> = Vec::new();
    let mut model: Option<PreferenceModel> = None;
    let mut trajectory = Vec::new();
    let mut generation = 0usize;
    let mut aborted = None;

    if let Some(mon) = monitor {
        trajectory.push(mon.record(engine.population(), 0, ctx.fe, false));
    }
    let mut progress =
        |engine: &dyn Engine, generation, fe, consultations: &[Consultation], model: Option<&PreferenceModel>| {
            observer(&Progress {
                generation,
                fe_used: fe,
                population: engine.population(),
                consultations,
                model,
            })
        };

    if progress(engine.as_ref(), 0, ctx.fe, &consultations, None).is_break() {
        aborted = Some("stopped by observer".to_string());
    }
    while aborted.is_none() && ctx.fe + cfg.pop_size <= cfg.max_fe {
        let consult = cfg.guidance && generation >= cfg.warmup && (generation - cfg.warmup).is_multiple_of(cfg.tau);
        if consult {
            match consult_once(
                cfg,
                dm,
                engine.as_ref(),
                model.as_ref(),
                generation,
                consultations.len(),
            ) {
                Ok(c) => {
                    records.extend(c.records.iter().cloned());
                    consultations.push(c);
                    let train_cfg = TrainConfig {
                        init_seed: seeding::derive(cfg.seed, &[0x4c, consultations.len() as u64]),
                        ..cfg.train.clone()
                    };
                    let normalization =
                        Normalization::from_points(cfg.problem.m, engine.population().iter().map(|s| s.f.as_slice()));
                    match ltr::train_with_normalization(&records, cfg.problem.m, &train_cfg, normalization) {
                        Ok(trained) => {
                            engine.apply_model(&trained, cfg.mu, cfg.eta_step)?;
                            model = Some(trained);
                        }
                        Err(Error::NoStrictPreference) => {
                            log::debug!("generation {generation}: no strict preference yet; model unchanged");
                        }
                        Err(e) => return Err(e),
                    }
                }
                Err(e) => {
                    aborted = Some(e.to_string());
                    break;
                }
            }
        }
        engine.generation(&mut ctx);
        generation += 1;
        if let Some(mon) = monitor {
            trajectory.push(mon.record(engine.population(), generation, ctx.fe, consult));
        }
        if progress(engine.as_ref(), generation, ctx.fe, &consultations, model.as_ref()).is_break() {
            aborted = Some("stopped by observer".to_string());
        }
    }

    let mut members = engine.population().to_vec();
    for s in &mut members {
        s.utility = model.as_ref().map(|m| m.score(&s.f)).transpose()?;
    }
    let mut final_population = Population::new(members, cfg.pop_size);
    final_population.assign_ranks();
    Ok(RunResult {
        final_population,
        consultations,
        trajectory,
        fe_used: ctx.fe,
        generations: generation,
        seed: cfg.seed,
        weights: engine.weights().map(<[_]>::to_vec),
        model,
        aborted,
    })
}

fn consult_once<D: DecisionMaker + ?Sized>(
    cfg: &RunConfig,
    dm: &mut D,
    engine: &dyn Engine,
    model: Option<&PreferenceModel>,
    generation: usize,
    index: usize,
) -> Result<Consultation> {
    let pop = engine.population();
    let objectives: Vec<&[f64]> = pop.iter().map(|s| s.f.as_slice()).collect();
    let utilities = model
        .map(|m| objectives.iter().map(|f| m.score(f)).collect::<Result<Vec<_>>>())
        .transpose()?;
    let candidates = oracle::select_candidates(&objectives, utilities.as_deref(), cfg.mu)?;
    let pairs = oracle::enumerate_queries(candidates.len())?;
    let queries: Vec<Query> = pairs
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| Query {
            consultation: index,
            generation,
            pair_index: k,
            fi: objectives[candidates[i]].to_vec(),
            fj: objectives[candidates[j]].to_vec(),
        })
        .collect();
    dm.begin_consultation(&queries)?;
    let mut out = Consultation {
        generation,
        records: Vec::with_capacity(queries.len()),
        flipped: 0,
    };
    for q in &queries {
        let j = dm.answer(q)?;
        out.flipped += usize::from(j.flipped);
        out.records
            .push(ComparisonRecord::new(q.fi.clone(), q.fj.clone(), j.outcome)?);
    }
    Ok(out)
}

/// Index of the better of two random members: lower `rank`, then higher `score`;
/// ties favour the first draw.
pub(crate) fn binary_tournament<R: Rng + ?Sized>(rank: &[usize], score: &[f64], rng: &mut R) -> usize {
    let a = rng.random_range(0..rank.len());
    let b = rng.random_range(0..rank.len());
    match rank[a].cmp(&rank[b]) {
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal => {
            if score[b] > score[a] {
                b
            } else {
                a
            }
        }
    }
}

/// Componentwise minimum.
pub(crate) fn update_ideal(z: &mut [f64], f: &[f64]) {
    for (zi, fi) in z.iter_mut().zip(f) {
        if *fi < *zi {
            *zi = *fi;
        }
    }
}

pub(crate) fn ideal_of(pop: &[Solution]) -> Vec<f64> {
    let mut z = vec![f64::INFINITY; pop[0].f.len()];
    for s in pop {
        update_ideal(&mut z, &s.f);
    }
    z
}
