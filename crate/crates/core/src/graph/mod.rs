//! Causal-graph data types, graphical separation oracles, equivalence-class
//! construction, and the structural-Hamming metric.
//!
//! Three graph families are represented:
//!
//! * [`CausalDag`] — directed acyclic graphs over node indices.
//! * [`Mag`] — mixed graphs with directed and bidirected edges, the
//!   marginalisation of a DAG onto its observed variables.
//! * [`Pattern`] — equivalence-class representations (CPDAGs and PAGs) under
//!   one endpoint-mark alphabet, so a single SHD implementation serves both
//!   learners.

mod dag;
mod endpoint;
pub mod format;
mod mag;
mod pattern;
mod separation;
mod shd;
mod transform;

pub use dag::CausalDag;
pub use endpoint::Mark;
pub use mag::Mag;
pub use pattern::{Pattern, PatternKind};
pub use separation::{d_separated, m_separated};
pub use shd::{shd, ShdReport};
pub use transform::{
    dag_to_cpdag, dag_to_mag, er_prob_for_expected_degree, mag_to_pag, random_er_dag,
};

pub(crate) use endpoint::EndpointGraph;
pub(crate) use transform::meek_closure;

use serde::{Deserialize, Serialize};

/// A named discrete variable and its number of categories.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableMeta {
    pub name: String,
    pub cardinality: usize,
}

impl VariableMeta {
    pub fn new(name: impl Into<String>, cardinality: usize) -> Result<Self, GraphError> {
        let name = name.into();
        if cardinality < 2 {
            return Err(GraphError::InvalidCardinality { name, cardinality });
        }
        Ok(Self { name, cardinality })
    }
}

/// Builds a schema of binary variables named `X0..X{d-1}`.
pub fn default_schema(d: usize, cardinality: usize) -> Vec<VariableMeta> {
    (0..d)
        .map(|i| VariableMeta::new(format!("X{i}"), cardinality).expect("cardinality >= 2"))
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("node index {index} out of range for a graph with {nodes} nodes")]
    NodeOutOfRange { index: usize, nodes: usize },
    #[error("graph must have at least one node")]
    Empty,
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("graph contains a directed cycle")]
    DirectedCycle,
    #[error("graph contains an almost-directed cycle through {a} <-> {b}")]
    AlmostDirectedCycle { a: usize, b: usize },
    #[error("query nodes must be distinct and disjoint from the conditioning set")]
    InvalidQuery,
    #[error("variable {name:?} has cardinality {cardinality}; at least 2 categories required")]
    InvalidCardinality { name: String, cardinality: usize },
    #[error("edge mark {0:?} not allowed for this graph kind")]
    MarkNotAllowed(Mark),
    #[error("latent set must leave at least one observed node")]
    NoObservedNodes,
    #[error("edge probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("patterns differ in shape: {0}")]
    PatternMismatch(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub(crate) fn check_node(index: usize, nodes: usize) -> Result<(), GraphError> {
    if index >= nodes {
        Err(GraphError::NodeOutOfRange { index, nodes })
    } else {
        Ok(())
    }
}
