//! Structural Hamming distance between patterns.

use super::{GraphError, Pattern};
use serde::{Deserialize, Serialize};

/// Edge-level breakdown of the distance between two patterns of one schema.
/// `shd = missing + extra + mark_mismatch`; a wrong adjacency counts once
/// regardless of marks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShdReport {
    pub shd: usize,
    /// Pairs adjacent in `a` but not in `b`.
    pub missing: usize,
    /// Pairs adjacent in `b` but not in `a`.
    pub extra: usize,
    /// Shared adjacencies whose endpoint-mark pair differs.
    pub mark_mismatch: usize,
}

/// Counts, per unordered node pair, one unit for an adjacency difference and
/// one unit for a mark difference on a shared adjacency.
pub fn shd(a: &Pattern, b: &Pattern) -> Result<ShdReport, GraphError> {
    if a.node_count() != b.node_count() {
        return Err(GraphError::PatternMismatch(format!(
            "{} vs {} nodes",
            a.node_count(),
            b.node_count()
        )));
    }
    if a.kind() != b.kind() {
        return Err(GraphError::PatternMismatch("pattern kinds differ".into()));
    }
    let n = a.node_count();
    let mut missing = 0;
    let mut extra = 0;
    let mut mark_mismatch = 0;
    for i in 0..n {
        for j in i + 1..n {
            match (a.adjacent(i, j), b.adjacent(i, j)) {
                (true, false) => missing += 1,
                (false, true) => extra += 1,
                (true, true) => {
                    let same = a.mark_at(i, j) == b.mark_at(i, j)
                        && a.mark_at(j, i) == b.mark_at(j, i);
                    if !same {
                        mark_mismatch += 1;
                    }
                }
                (false, false) => {}
            }
        }
    }
    Ok(ShdReport { shd: missing + extra + mark_mismatch, missing, extra, mark_mismatch })
}
