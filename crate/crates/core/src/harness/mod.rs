//! Experiment runner: generate or load data, partition it across clients,
//! run the configured learners, score them against the ground-truth
//! equivalence class, and emit machine-readable results.

mod runner;
pub mod sachs;

pub use runner::{
    dropout_experiment, emit_results, run_experiment, DropoutComparison, DropoutDelta,
    EmitFormat, ExperimentOutput, RunResult, SummaryRow,
};

use crate::data::DataError;
use crate::fedci::CiMode;
use crate::graph::GraphError;
use crate::learner::LearnError;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("toml: {0}")]
    Toml(String),
}

/// Registered learning algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Pc,
    Fci,
    FedPc,
    FedFci,
    PcVoting,
    PcCitVoting,
    FciVoting,
    FciCitVoting,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Pc,
        Algorithm::Fci,
        Algorithm::FedPc,
        Algorithm::FedFci,
        Algorithm::PcVoting,
        Algorithm::PcCitVoting,
        Algorithm::FciVoting,
        Algorithm::FciCitVoting,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::Pc => "pc",
            Algorithm::Fci => "fci",
            Algorithm::FedPc => "fedpc",
            Algorithm::FedFci => "fedfci",
            Algorithm::PcVoting => "pc-voting",
            Algorithm::PcCitVoting => "pc-cit-voting",
            Algorithm::FciVoting => "fci-voting",
            Algorithm::FciCitVoting => "fci-cit-voting",
        }
    }

    /// FCI-family algorithms produce PAGs; the rest produce CPDAGs.
    pub fn is_fci_family(self) -> bool {
        matches!(
            self,
            Algorithm::Fci | Algorithm::FedFci | Algorithm::FciVoting | Algorithm::FciCitVoting
        )
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| format!("unknown algorithm {s:?}"))
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Where the ground truth and data come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum GraphSource {
    /// ER DAG with Dirichlet-sampled CPTs, forward-sampled data.
    Synthetic {
        nodes: usize,
        #[serde(default = "defaults::expected_degree")]
        expected_degree: f64,
        #[serde(default = "defaults::cardinality")]
        cardinality: usize,
        #[serde(default = "defaults::dirichlet_alpha")]
        dirichlet_alpha: f64,
        /// Number of randomly chosen latent variables masked from the data.
        #[serde(default)]
        latents: usize,
    },
    /// CSV data plus a ground-truth graph file.
    Dataset { data: PathBuf, truth: PathBuf },
}

/// Surrogate-variable heterogeneity: client routing driven by the listed
/// parent columns with the given sharpness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeterogeneityConfig {
    pub parents: Vec<usize>,
    #[serde(default = "defaults::sharpness")]
    pub sharpness: f64,
}

mod defaults {
    pub fn expected_degree() -> f64 {
        2.0
    }
    pub fn cardinality() -> usize {
        2
    }
    pub fn dirichlet_alpha() -> f64 {
        1.0
    }
    pub fn sharpness() -> f64 {
        6.0
    }
    pub fn samples() -> usize {
        5000
    }
    pub fn alpha() -> f64 {
        0.05
    }
    pub fn encoding_size() -> usize {
        50
    }
    pub fn repetitions() -> usize {
        5
    }
}

/// One experiment grid: every `(seed, client count, algorithm)` cell runs on
/// identical partitions and seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub graph: GraphSource,
    #[serde(default = "defaults::samples")]
    pub samples: usize,
    pub clients: Vec<usize>,
    pub algorithms: Vec<String>,
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default = "defaults::encoding_size")]
    pub encoding_size: usize,
    #[serde(default)]
    pub mode: CiMode,
    #[serde(default = "defaults::repetitions")]
    pub repetitions: usize,
    /// Explicit per-repetition seeds; derived from `base_seed` otherwise.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub heterogeneity: Option<HeterogeneityConfig>,
    /// Fraction of clients dropped wholesale from every federated round.
    #[serde(default)]
    pub dropout_fraction: Option<f64>,
    /// Parallel worker count for grid cells; defaults to the rayon pool.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Conditioning-set cap forwarded to the learners.
    #[serde(default)]
    pub max_cond: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).map_err(|e| HarnessError::Toml(e.to_string())),
            _ => Ok(serde_json::from_str(&text)?),
        }
    }

    pub fn algorithms(&self) -> Result<Vec<Algorithm>, HarnessError> {
        self.algorithms
            .iter()
            .map(|s| Algorithm::from_str(s).map_err(HarnessError::Config))
            .collect()
    }

    pub fn effective_seeds(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (0..self.repetitions)
                .map(|r| crate::seeding::derive_u64(self.base_seed, "rep", &[r as u64]))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.repetitions == 0 {
            return Err(HarnessError::Config("repetitions must be at least 1".into()));
        }
        if self.clients.is_empty() || self.clients.contains(&0) {
            return Err(HarnessError::Config("client counts must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(HarnessError::Config(format!("alpha {} outside (0,1)", self.alpha)));
        }
        if self.encoding_size < 2 {
            return Err(HarnessError::Config("encoding size must be at least 2".into()));
        }
        if let Some(f) = self.dropout_fraction {
            if !(0.0..1.0).contains(&f) {
                return Err(HarnessError::Config(format!("dropout fraction {f} outside [0,1)")));
            }
        }
        let algorithms = self.algorithms()?;
        if algorithms.is_empty() {
            return Err(HarnessError::Config("no algorithms configured".into()));
        }
        if let GraphSource::Synthetic { latents, nodes, .. } = &self.graph {
            if *latents >= *nodes {
                return Err(HarnessError::Config(
                    "latent count must leave at least one observed node".into(),
                ));
            }
            if *latents > 0 {
                if algorithms.iter().any(|a| !a.is_fci_family()) {
                    return Err(HarnessError::Config(
                        "latent variables require FCI-family algorithms".into(),
                    ));
                }
                if self.heterogeneity.is_some() {
                    return Err(HarnessError::Config(
                        "heterogeneity and latents cannot be combined".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}
