//! Shared endpoint-mark storage for mixed graphs and patterns.

use serde::{Deserialize, Serialize};

/// The mark an edge carries at one of its two ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mark {
    Tail,
    Arrow,
    Circle,
}

/// Dense symmetric edge storage: `marks[a * n + b]` is the mark at the `a`
/// end of the edge between `a` and `b` (`None` when the pair is nonadjacent).
///
/// A directed edge `a -> b` is `Tail` at `a` and `Arrow` at `b`; a bidirected
/// edge carries `Arrow` at both ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct EndpointGraph {
    n: usize,
    marks: Vec<Option<Mark>>,
}

impl EndpointGraph {
    pub fn new(n: usize) -> Self {
        Self { n, marks: vec![None; n * n] }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        a != b && self.marks[a * self.n + b].is_some()
    }

    /// Mark at the `end` side of the edge between `end` and `other`.
    pub fn mark_at(&self, end: usize, other: usize) -> Option<Mark> {
        self.marks[end * self.n + other]
    }

    pub fn set_edge(&mut self, a: usize, mark_a: Mark, mark_b: Mark, b: usize) {
        debug_assert_ne!(a, b);
        self.marks[a * self.n + b] = Some(mark_a);
        self.marks[b * self.n + a] = Some(mark_b);
    }

    pub fn set_mark_at(&mut self, end: usize, other: usize, mark: Mark) {
        debug_assert!(self.adjacent(end, other));
        self.marks[end * self.n + other] = Some(mark);
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&w| self.adjacent(v, w))
    }

    /// Edges as `(a, mark_a, mark_b, b)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, Mark, Mark, usize)> + '_ {
        (0..self.n).flat_map(move |a| {
            (a + 1..self.n).filter_map(move |b| {
                let ma = self.mark_at(a, b)?;
                let mb = self.mark_at(b, a)?;
                Some((a, ma, mb, b))
            })
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// `true` iff `a -> b` (tail at `a`, arrow at `b`).
    pub fn is_directed(&self, a: usize, b: usize) -> bool {
        self.mark_at(a, b) == Some(Mark::Tail) && self.mark_at(b, a) == Some(Mark::Arrow)
    }

    /// Parents under the directed-edge interpretation.
    pub fn parents(&self, v: usize) -> Vec<usize> {
        (0..self.n).filter(|&u| self.is_directed(u, v)).collect()
    }

    /// Nodes with a directed path into `targets` (each target included).
    pub fn ancestors_of_set(&self, targets: &[usize]) -> Vec<bool> {
        let mut reached = vec![false; self.n];
        let mut stack: Vec<usize> = targets.to_vec();
        for &t in targets {
            reached[t] = true;
        }
        while let Some(v) = stack.pop() {
            for u in self.parents(v) {
                if !reached[u] {
                    reached[u] = true;
                    stack.push(u);
                }
            }
        }
        reached
    }
}
