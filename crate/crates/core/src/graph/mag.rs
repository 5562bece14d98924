//! Mixed ancestral graphs: directed and bidirected edges.

use super::{check_node, EndpointGraph, GraphError, Mark};

/// A graph whose edges carry `Tail`/`Arrow` marks at each end: `a -> b`
/// (tail/arrow) or `a <-> b` (arrow/arrow). No directed cycle and no
/// almost-directed cycle (a bidirected edge between a node and its ancestor)
/// may exist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mag {
    g: EndpointGraph,
}

impl Mag {
    /// Builds a MAG from `(a, mark_at_a, mark_at_b, b)` edges.
    pub fn new(n: usize, edges: &[(usize, Mark, Mark, usize)]) -> Result<Self, GraphError> {
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
            for m in [ma, mb] {
                if m == Mark::Circle {
                    return Err(GraphError::MarkNotAllowed(m));
                }
            }
            // Tail-tail (undirected selection edges) are outside this MAG class.
            if ma == Mark::Tail && mb == Mark::Tail {
                return Err(GraphError::MarkNotAllowed(Mark::Tail));
            }
            g.set_edge(a, ma, mb, b);
        }
        let mag = Self { g };
        mag.validate_cycles()?;
        Ok(mag)
    }

    fn validate_cycles(&self) -> Result<(), GraphError> {
        let n = self.node_count();
        // Directed part must be acyclic.
        let mut indeg = vec![0usize; n];
        for v in 0..n {
            indeg[v] = self.parents(v).len();
        }
        let mut ready: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = ready.pop() {
            seen += 1;
            for w in 0..n {
                if self.g.is_directed(v, w) {
                    indeg[w] -= 1;
                    if indeg[w] == 0 {
                        ready.push(w);
                    }
                }
            }
        }
        if seen != n {
            return Err(GraphError::DirectedCycle);
        }
        // Almost-directed cycle: a <-> b with a an ancestor of b (or vice versa).
        for (a, ma, mb, b) in self.g.edges() {
            if ma == Mark::Arrow && mb == Mark::Arrow {
                let anc_b = self.g.ancestors_of_set(&[b]);
                let anc_a = self.g.ancestors_of_set(&[a]);
                if anc_b[a] || anc_a[b] {
                    return Err(GraphError::AlmostDirectedCycle { a, b });
                }
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.g.node_count()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.g.adjacent(a, b)
    }

    /// Mark at the `end` side of the edge between `end` and `other`.
    pub fn mark_at(&self, end: usize, other: usize) -> Option<Mark> {
        self.g.mark_at(end, other)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, Mark, Mark, usize)> + '_ {
        self.g.edges()
    }

    pub fn edge_count(&self) -> usize {
        self.g.edge_count()
    }

    pub fn parents(&self, v: usize) -> Vec<usize> {
        self.g.parents(v)
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.g.neighbors(v).collect()
    }

    /// Ancestry via directed edges only; bidirected edges confer none.
    pub fn ancestors_of_set(&self, targets: &[usize]) -> Vec<bool> {
        self.g.ancestors_of_set(targets)
    }
}
