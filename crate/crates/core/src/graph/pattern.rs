//! Equivalence-class patterns: CPDAGs and PAGs under one mark alphabet.

use super::{check_node, EndpointGraph, GraphError, Mark};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    Cpdag,
    Pag,
}

/// A pattern over node indices. CPDAG patterns restrict marks to
/// `Tail`/`Arrow` with undirected edges encoded tail-tail; PAG patterns may
/// carry circles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    kind: PatternKind,
    g: EndpointGraph,
}

impl Pattern {
    pub fn new(
        kind: PatternKind,
        n: usize,
        edges: &[(usize, Mark, Mark, usize)],
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut g = EndpointGraph::new(n);
        for &(a, ma, mb, b) in edges {
            check_node(a, n)?;
            check_node(b, n)?;
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if kind == PatternKind::Cpdag {
                for m in [ma, mb] {
                    if m == Mark::Circle {
                        return Err(GraphError::MarkNotAllowed(m));
                    }
                }
                // CPDAG edges are either undirected (tail-tail) or directed.
                if ma == Mark::Arrow && mb == Mark::Arrow {
                    return Err(GraphError::MarkNotAllowed(Mark::Arrow));
                }
            }
            g.set_edge(a, ma, mb, b);
        }
        Ok(Self { kind, g })
    }

    pub fn empty(kind: PatternKind, n: usize) -> Result<Self, GraphError> {
        Self::new(kind, n, &[])
    }

    pub(crate) fn from_endpoint_graph(kind: PatternKind, g: EndpointGraph) -> Self {
        Self { kind, g }
    }

    pub fn kind(&self) -> PatternKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.g.node_count()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.g.adjacent(a, b)
    }

    pub fn mark_at(&self, end: usize, other: usize) -> Option<Mark> {
        self.g.mark_at(end, other)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, Mark, Mark, usize)> + '_ {
        self.g.edges()
    }

    pub fn edge_count(&self) -> usize {
        self.g.edge_count()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.g.neighbors(v).collect()
    }

    /// `true` iff `a -> b` with tail at `a` and arrow at `b`.
    pub fn is_directed(&self, a: usize, b: usize) -> bool {
        self.g.is_directed(a, b)
    }

    /// `true` iff the edge is tail-tail.
    pub fn is_undirected(&self, a: usize, b: usize) -> bool {
        self.mark_at(a, b) == Some(Mark::Tail) && self.mark_at(b, a) == Some(Mark::Tail)
    }
}
