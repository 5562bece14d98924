//! Graphical separation oracles.
//!
//! Both tests run the same reachability construction: a breadth-first search
//! over `(node, entered-with-arrowhead)` states. A walk may pass a node `v`
//! iff `v` is a collider on the walk and has a descendant in the conditioning
//! set, or `v` is a non-collider outside the conditioning set. Walk
//! reachability coincides with active-path existence, which the test suite
//! checks against exhaustive path enumeration on small graphs.

use super::{check_node, CausalDag, GraphError, Mag, Mark};
use std::collections::VecDeque;

fn validate_query(n: usize, x: usize, y: usize, cond: &[usize]) -> Result<(), GraphError> {
    check_node(x, n)?;
    check_node(y, n)?;
    for &z in cond {
        check_node(z, n)?;
    }
    if x == y || cond.contains(&x) || cond.contains(&y) {
        return Err(GraphError::InvalidQuery);
    }
    Ok(())
}

/// Shared walk search. `arrow_at(end, other)` reports an arrowhead at the
/// `end` side of the edge between `end` and `other`.
fn active_walk_exists(
    n: usize,
    adjacent: &dyn Fn(usize, usize) -> bool,
    arrow_at: &dyn Fn(usize, usize) -> bool,
    x: usize,
    y: usize,
    in_cond: &[bool],
    anc_of_cond: &[bool],
) -> bool {
    // seen[v][entered_with_arrow]
    let mut seen = vec![[false; 2]; n];
    let mut queue = VecDeque::new();
    for w in 0..n {
        if !adjacent(x, w) {
            continue;
        }
        if w == y {
            return true;
        }
        let entry = usize::from(arrow_at(w, x));
        if !seen[w][entry] {
            seen[w][entry] = true;
            queue.push_back((w, entry));
        }
    }
    while let Some((v, entry)) = queue.pop_front() {
        for w in 0..n {
            if !adjacent(v, w) {
                continue;
            }
            let leaves_with_arrow = arrow_at(v, w);
            let collider = entry == 1 && leaves_with_arrow;
            let passable = if collider { anc_of_cond[v] } else { !in_cond[v] };
            if !passable {
                continue;
            }
            if w == y {
                return true;
            }
            let next_entry = usize::from(arrow_at(w, v));
            if !seen[w][next_entry] {
                seen[w][next_entry] = true;
                queue.push_back((w, next_entry));
            }
        }
    }
    false
}

/// d-separation of `x` and `y` given `cond` in a DAG.
pub fn d_separated(g: &CausalDag, x: usize, y: usize, cond: &[usize]) -> Result<bool, GraphError> {
    let n = g.node_count();
    validate_query(n, x, y, cond)?;
    let mut in_cond = vec![false; n];
    for &z in cond {
        in_cond[z] = true;
    }
    let anc = g.ancestors_of_set(cond);
    let connected = active_walk_exists(
        n,
        &|a, b| g.adjacent(a, b),
        &|end, other| g.has_edge(other, end),
        x,
        y,
        &in_cond,
        &anc,
    );
    Ok(!connected)
}

/// m-separation of `x` and `y` given `cond` in a MAG.
pub fn m_separated(m: &Mag, x: usize, y: usize, cond: &[usize]) -> Result<bool, GraphError> {
    let n = m.node_count();
    validate_query(n, x, y, cond)?;
    let mut in_cond = vec![false; n];
    for &z in cond {
        in_cond[z] = true;
    }
    let anc = m.ancestors_of_set(cond);
    let connected = active_walk_exists(
        n,
        &|a, b| m.adjacent(a, b),
        &|end, other| m.mark_at(end, other) == Some(Mark::Arrow),
        x,
        y,
        &in_cond,
        &anc,
    );
    Ok(!connected)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_blocked_by_middle() {
        let g = CausalDag::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(!d_separated(&g, 0, 2, &[]).unwrap());
        assert!(d_separated(&g, 0, 2, &[1]).unwrap());
    }

    #[test]
    fn collider_opens_under_conditioning() {
        let g = CausalDag::new(3, &[(0, 1), (2, 1)]).unwrap();
        assert!(d_separated(&g, 0, 2, &[]).unwrap());
        assert!(!d_separated(&g, 0, 2, &[1]).unwrap());
    }

    #[test]
    fn conditioned_confounder_blocks() {
        // Z -> X, Z -> Y: conditioning on the observed confounder separates.
        let g = CausalDag::new(3, &[(2, 0), (2, 1)]).unwrap();
        assert!(!d_separated(&g, 0, 1, &[]).unwrap());
        assert!(d_separated(&g, 0, 1, &[2]).unwrap());
    }

    #[test]
    fn descendant_of_collider_opens_path() {
        // 0 -> 1 <- 2, 1 -> 3: conditioning on 3 activates the collider.
        let g = CausalDag::new(4, &[(0, 1), (2, 1), (1, 3)]).unwrap();
        assert!(d_separated(&g, 0, 2, &[]).unwrap());
        assert!(!d_separated(&g, 0, 2, &[3]).unwrap());
    }

    #[test]
    fn mag_examples() {
        // X <-> Y: adjacent nodes are never separated.
        let m = Mag::new(2, &[(0, Mark::Arrow, Mark::Arrow, 1)]).unwrap();
        assert!(!m_separated(&m, 0, 1, &[]).unwrap());

        // X <-> Z <-> Y with Z a collider on the only path.
        let m = Mag::new(
            3,
            &[(0, Mark::Arrow, Mark::Arrow, 2), (2, Mark::Arrow, Mark::Arrow, 1)],
        )
        .unwrap();
        assert!(m_separated(&m, 0, 1, &[]).unwrap());
        assert!(!m_separated(&m, 0, 1, &[2]).unwrap());

        // X -> W <-> Y with W conditioned: W is a collider on the path, so
        // conditioning on it activates the walk.
        let m = Mag::new(
            3,
            &[(0, Mark::Tail, Mark::Arrow, 1), (1, Mark::Arrow, Mark::Arrow, 2)],
        )
        .unwrap();
        assert!(!m_separated(&m, 0, 2, &[1]).unwrap());
        assert!(m_separated(&m, 0, 2, &[]).unwrap());
    }

    #[test]
    fn query_validation() {
        let g = CausalDag::new(3, &[(0, 1)]).unwrap();
        assert!(d_separated(&g, 0, 0, &[]).is_err());
        assert!(d_separated(&g, 0, 1, &[0]).is_err());
        assert!(d_separated(&g, 0, 7, &[]).is_err());
    }
}
