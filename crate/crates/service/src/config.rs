use serde::{Deserialize, Serialize};

use iemo::algorithms::{Algorithm, Monitor, RunConfig};
use iemo::harness::CellSpec;
use iemo::ltr::TrainConfig;
use iemo::problems::Family;

use crate::error::{Result, ServiceError};

/// Body of `POST /v1/sessions`: a run without a simulated DM.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub algorithm: Algorithm,
    pub problem: Family,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pop_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_fe: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    #[serde(default)]
    pub seed: u64,
    /// Utopia weights of a golden point to display; not used for steering.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_star: Option<Vec<f64>>,
}

impl SessionConfig {
    pub fn new(algorithm: Algorithm, problem: Family, m: usize) -> Self {
        Self {
            algorithm,
            problem,
            m,
            n: None,
            pop_size: None,
            max_fe: None,
            tau: None,
            warmup: None,
            mu: None,
            eta_step: None,
            train: None,
            seed: 0,
            w_star: None,
        }
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let cell = CellSpec {
            n: self.n,
            pop_size: self.pop_size,
            max_fe: self.max_fe,
            tau: self.tau,
            warmup: self.warmup,
            mu: self.mu,
            eta_step: self.eta_step,
            train: self.train.clone(),
            ..CellSpec::new(self.algorithm, self.problem, self.m)
        };
        Ok(cell.run_config(self.seed)?)
    }

    pub fn monitor(&self, cfg: &RunConfig) -> Result<Option<Monitor>> {
        match &self.w_star {
            None => Ok(None),
            Some(w) if w.len() != self.m => Err(ServiceError::invalid(
                Some("w_star"),
                format!("needs {} entries", self.m),
            )),
            Some(w) => Ok(Some(Monitor::new(&cfg.problem, w.clone())?)),
        }
    }
}

/// Parses a request body and names the offending field where possible.
pub fn parse_body<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().to_string();
        let field = if path != "." {
            Some(path)
        } else if message.starts_with("missing field") || message.starts_with("unknown field") {
            message.split('`').nth(1).map(str::to_string)
        } else {
            None
        };
        ServiceError::Invalid { field, message }
    })
}
