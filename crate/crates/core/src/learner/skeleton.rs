//! Level-wise skeleton search with per-level adjacency snapshots, so edge
//! removals within a level cannot influence that level's candidate sets.

use super::{CiOracle, LearnError, SeparationSets};
use crate::fedci::CiQuery;

/// Symmetric adjacency structure produced by the skeleton phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonGraph {
    n: usize,
    adj: Vec<bool>,
}

impl SkeletonGraph {
    pub fn complete(n: usize) -> Self {
        let mut adj = vec![true; n * n];
        for v in 0..n {
            adj[v * n + v] = false;
        }
        Self { n, adj }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a * self.n + b]
    }

    pub fn remove(&mut self, a: usize, b: usize) {
        self.adj[a * self.n + b] = false;
        self.adj[b * self.n + a] = false;
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        (0..self.n).filter(|&w| self.adjacent(v, w)).collect()
    }

    /// Unordered adjacent pairs, ascending.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in a + 1..self.n {
                if self.adjacent(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

/// Lexicographic fixed-size subsets of a sorted candidate pool.
pub(crate) fn for_each_subset<E>(
    pool: &[usize],
    size: usize,
    mut f: impl FnMut(&[usize]) -> Result<bool, E>,
) -> Result<bool, E> {
    if size > pool.len() {
        return Ok(false);
    }
    let mut index: Vec<usize> = (0..size).collect();
    let mut subset = vec![0usize; size];
    loop {
        for (slot, &i) in index.iter().enumerate() {
            subset[slot] = pool[i];
        }
        if f(&subset)? {
            return Ok(true);
        }
        // Advance the combination indices.
        let mut k = size;
        loop {
            if k == 0 {
                return Ok(false);
            }
            k -= 1;
            if index[k] != k + pool.len() - size {
                index[k] += 1;
                for j in k + 1..size {
                    index[j] = index[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn ask(
    oracle: &mut dyn CiOracle,
    x: usize,
    y: usize,
    cond: &[usize],
) -> Result<bool, LearnError> {
    let query = CiQuery::new(x, y, cond.to_vec()).expect("skeleton generates valid queries");
    oracle.independent(&query).map_err(|source| LearnError::Oracle {
        x,
        y,
        cond: cond.to_vec(),
        source,
    })
}

/// Level-wise search: starting from the complete graph, at level `l` every
/// remaining edge is tested against size-`l` subsets of the level-snapshot
/// adjacencies of either endpoint; the first independence removes the edge
/// and records the separator.
pub fn skeleton(
    oracle: &mut dyn CiOracle,
    d: usize,
    max_cond: Option<usize>,
) -> Result<(SkeletonGraph, SeparationSets), LearnError> {
    if d < 2 {
        return Err(LearnError::TooFewVariables(d));
    }
    let mut graph = SkeletonGraph::complete(d);
    let mut sepsets = SeparationSets::new();

    let mut level = 0usize;
    loop {
        if max_cond.is_some_and(|cap| level > cap) {
            break;
        }
        let snapshot = graph.clone();
        let edges = snapshot.edges();
        // Stop once no endpoint offers enough candidate neighbors.
        let feasible = edges
            .iter()
            .any(|&(x, y)| snapshot.neighbors(x).len() > level || snapshot.neighbors(y).len() > level);
        if !feasible {
            break;
        }

        for (x, y) in edges {
            if !graph.adjacent(x, y) {
                continue;
            }
            let pool_x: Vec<usize> =
                snapshot.neighbors(x).into_iter().filter(|&v| v != y).collect();
            let pool_y: Vec<usize> =
                snapshot.neighbors(y).into_iter().filter(|&v| v != x).collect();

            let mut separator: Option<Vec<usize>> = None;
            if pool_x.len() >= level {
                for_each_subset(&pool_x, level, |cond| -> Result<bool, LearnError> {
                    if ask(oracle, x, y, cond)? {
                        separator = Some(cond.to_vec());
                        return Ok(true);
                    }
                    Ok(false)
                })?;
            }
            if separator.is_none() && pool_y.len() >= level {
                let x_side_covers =
                    |cond: &[usize]| cond.iter().all(|v| pool_x.contains(v)) && pool_x.len() >= level;
                for_each_subset(&pool_y, level, |cond| -> Result<bool, LearnError> {
                    // Already tested from the x side.
                    if x_side_covers(cond) {
                        return Ok(false);
                    }
                    if ask(oracle, x, y, cond)? {
                        separator = Some(cond.to_vec());
                        return Ok(true);
                    }
                    Ok(false)
                })?;
            }
            if let Some(sep) = separator {
                graph.remove(x, y);
                sepsets.insert(x, y, sep);
            }
        }
        level += 1;
    }
    Ok((graph, sepsets))
}
