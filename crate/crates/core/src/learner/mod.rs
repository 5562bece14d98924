//! Constraint-based structure learning generic over a conditional-independence
//! oracle: PC (CPDAGs), FCI (PAGs), their federated instantiations, and the
//! voting baselines.

mod fci;
mod oracle;
mod pc;
mod skeleton;
mod voting;

pub use fci::{fci_learn, FciResult};
pub use oracle::{
    CachedOracle, Chi2Oracle, CiOracle, CitVotingOracle, DSeparationOracle, FedCiOracle,
    MSeparationOracle, QueryRecord,
};
pub use pc::{orient_pc, pc_learn, PcResult};
pub use skeleton::{skeleton, SkeletonGraph};
pub use voting::{
    fci_centralized, fci_cit_voting, fci_voting, fedfci, fedpc, pc_centralized, pc_cit_voting,
    pc_voting, LearnRun, RunManifest,
};

use crate::fedci::CiError;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error("CI query x={x} y={y} cond={cond:?} failed: {source}")]
    Oracle {
        x: usize,
        y: usize,
        cond: Vec<usize>,
        #[source]
        source: CiError,
    },
    #[error("learning needs at least two variables, got {0}")]
    TooFewVariables(usize),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
}

/// Knobs shared by the PC and FCI pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnerConfig {
    /// Largest conditioning-set size tested; `None` for unlimited.
    pub max_cond: Option<usize>,
    /// Whether FCI re-tests adjacencies against possible-d-separating sets.
    pub pdsep_prune: bool,
}

impl LearnerConfig {
    pub fn unlimited() -> Self {
        Self { max_cond: None, pdsep_prune: true }
    }

    /// Unlimited conditioning up to 20 variables, capped at 3 beyond that.
    pub fn for_nodes(d: usize) -> Self {
        Self { max_cond: (d > 20).then_some(3), pdsep_prune: true }
    }
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self::unlimited()
    }
}

/// Conditioning sets that rendered pairs independent during skeleton search,
/// keyed by the unordered pair.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeparationSets {
    map: HashMap<(usize, usize), Vec<usize>>,
}

impl SeparationSets {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(x: usize, y: usize) -> (usize, usize) {
        (x.min(y), x.max(y))
    }

    pub fn insert(&mut self, x: usize, y: usize, set: Vec<usize>) {
        self.map.insert(Self::key(x, y), set);
    }

    pub fn get(&self, x: usize, y: usize) -> Option<&[usize]> {
        self.map.get(&Self::key(x, y)).map(|v| v.as_slice())
    }

    pub fn separates(&self, x: usize, y: usize, z: usize) -> bool {
        self.get(x, y).is_some_and(|s| s.contains(&z))
    }

    pub fn entries(&self) -> Vec<SepsetEntry> {
        let mut out: Vec<SepsetEntry> = self
            .map
            .iter()
            .map(|(&(x, y), set)| SepsetEntry { x, y, sepset: set.clone() })
            .collect();
        out.sort_by_key(|e| (e.x, e.y));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SepsetEntry {
    pub x: usize,
    pub y: usize,
    pub sepset: Vec<usize>,
}

/// Orientation bookkeeping: how often rules tried to overwrite committed
/// endpoint marks. Nonzero counts indicate an inconsistent oracle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrientDiagnostics {
    pub vstructure_conflicts: usize,
    pub orientation_conflicts: usize,
}
