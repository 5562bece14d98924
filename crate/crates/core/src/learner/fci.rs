//! FCI: skeleton search, possible-d-separating-set pruning, collider
//! orientation over circle marks, and the complete orientation rules for
//! partial ancestral graphs.
//!
//! The rule set covers the arrowhead and tail rules applicable without
//! selection bias (the MAG class here carries directed and bidirected edges
//! only, so the undirected-edge rules can never fire and are omitted).

use super::skeleton::for_each_subset;
use super::{
    skeleton, CiOracle, LearnError, LearnerConfig, OrientDiagnostics, SeparationSets,
    SkeletonGraph,
};
use crate::fedci::CiQuery;
use crate::graph::{EndpointGraph, Mark, Pattern, PatternKind};

#[derive(Debug, Clone)]
pub struct FciResult {
    pub pattern: Pattern,
    pub sepsets: SeparationSets,
    pub diagnostics: OrientDiagnostics,
}

/// Runs the full FCI pipeline against an oracle.
pub fn fci_learn(
    oracle: &mut dyn CiOracle,
    d: usize,
    cfg: &LearnerConfig,
) -> Result<FciResult, LearnError> {
    let (mut graph, mut sepsets) = skeleton(oracle, d, cfg.max_cond)?;
    let mut diagnostics = OrientDiagnostics::default();

    let mut eg = circle_skeleton(&graph);
    orient_colliders(&mut eg, &graph, &sepsets, &mut diagnostics);

    if cfg.pdsep_prune {
        prune_with_pdsep(oracle, &mut graph, &mut sepsets, &eg, cfg.max_cond)?;
        // Re-orient from scratch on the pruned skeleton.
        eg = circle_skeleton(&graph);
        orient_colliders(&mut eg, &graph, &sepsets, &mut diagnostics);
    }

    zhang_closure(&mut eg, &sepsets, &mut diagnostics);
    Ok(FciResult {
        pattern: Pattern::from_endpoint_graph(PatternKind::Pag, eg),
        sepsets,
        diagnostics,
    })
}

fn circle_skeleton(graph: &SkeletonGraph) -> EndpointGraph {
    let mut eg = EndpointGraph::new(graph.node_count());
    for (a, b) in graph.edges() {
        eg.set_edge(a, Mark::Circle, Mark::Circle, b);
    }
    eg
}

/// Unshielded triples `x *-* z *-* y` with `z` outside the recorded
/// separator get arrowheads at `z`; other endpoint marks stay as they are.
fn orient_colliders(
    eg: &mut EndpointGraph,
    graph: &SkeletonGraph,
    sepsets: &SeparationSets,
    diagnostics: &mut OrientDiagnostics,
) {
    let n = graph.node_count();
    for z in 0..n {
        let nb = graph.neighbors(z);
        for (i, &x) in nb.iter().enumerate() {
            for &y in &nb[i + 1..] {
                if graph.adjacent(x, y) || sepsets.separates(x, y, z) {
                    continue;
                }
                for spoke in [x, y] {
                    if eg.mark_at(z, spoke) == Some(Mark::Tail) {
                        diagnostics.vstructure_conflicts += 1;
                    } else {
                        eg.set_mark_at(z, spoke, Mark::Arrow);
                    }
                }
            }
        }
    }
}

/// Nodes reachable from `x` along paths whose every interior node is either
/// a collider on the path or the middle of a triangle.
fn possible_d_sep(eg: &EndpointGraph, graph: &SkeletonGraph, x: usize) -> Vec<usize> {
    let n = graph.node_count();
    let mut in_set = vec![false; n];
    // Walk states (prev, cur).
    let mut seen = vec![false; n * n];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for v in graph.neighbors(x) {
        seen[x * n + v] = true;
        stack.push((x, v));
        in_set[v] = true;
    }
    while let Some((prev, cur)) = stack.pop() {
        for next in graph.neighbors(cur) {
            if next == prev || seen[cur * n + next] {
                continue;
            }
            let collider = eg.mark_at(cur, prev) == Some(Mark::Arrow)
                && eg.mark_at(cur, next) == Some(Mark::Arrow);
            let triangle = graph.adjacent(prev, next);
            if collider || triangle {
                seen[cur * n + next] = true;
                in_set[next] = true;
                stack.push((cur, next));
            }
        }
    }
    in_set[x] = false;
    (0..n).filter(|&v| in_set[v]).collect()
}

/// Re-tests every remaining adjacency against subsets of the endpoint's
/// possible-d-separating set, removing edges and recording separators.
fn prune_with_pdsep(
    oracle: &mut dyn CiOracle,
    graph: &mut SkeletonGraph,
    sepsets: &mut SeparationSets,
    eg: &EndpointGraph,
    max_cond: Option<usize>,
) -> Result<(), LearnError> {
    let n = graph.node_count();
    for x in 0..n {
        let neighbors = graph.neighbors(x);
        for y in neighbors {
            if !graph.adjacent(x, y) {
                continue;
            }
            let pool: Vec<usize> =
                possible_d_sep(eg, graph, x).into_iter().filter(|&v| v != y).collect();
            let cap = max_cond.unwrap_or(pool.len()).min(pool.len());
            let mut separator: Option<Vec<usize>> = None;
            'sizes: for size in 0..=cap {
                let found = for_each_subset(&pool, size, |cond| {
                    let query =
                        CiQuery::new(x, y, cond.to_vec()).expect("pdsep queries are valid");
                    match oracle.independent(&query) {
                        Ok(true) => {
                            separator = Some(cond.to_vec());
                            Ok(true)
                        }
                        Ok(false) => Ok(false),
                        Err(source) => Err(LearnError::Oracle {
                            x,
                            y,
                            cond: cond.to_vec(),
                            source,
                        }),
                    }
                })?;
                if found {
                    break 'sizes;
                }
            }
            if let Some(sep) = separator {
                graph.remove(x, y);
                sepsets.insert(x, y, sep);
            }
        }
    }
    Ok(())
}

fn set_mark(
    eg: &mut EndpointGraph,
    end: usize,
    other: usize,
    mark: Mark,
    diagnostics: &mut OrientDiagnostics,
) -> bool {
    match eg.mark_at(end, other) {
        Some(Mark::Circle) => {
            eg.set_mark_at(end, other, mark);
            true
        }
        Some(current) if current == mark => false,
        Some(_) => {
            diagnostics.orientation_conflicts += 1;
            false
        }
        None => false,
    }
}

fn arrow_at(eg: &EndpointGraph, end: usize, other: usize) -> bool {
    eg.mark_at(end, other) == Some(Mark::Arrow)
}

fn circle_at(eg: &EndpointGraph, end: usize, other: usize) -> bool {
    eg.mark_at(end, other) == Some(Mark::Circle)
}

fn directed(eg: &EndpointGraph, a: usize, b: usize) -> bool {
    eg.mark_at(a, b) == Some(Mark::Tail) && eg.mark_at(b, a) == Some(Mark::Arrow)
}

/// Potentially directed edge from `a` to `b`: no arrowhead back at `a`, no
/// tail at `b`.
fn pd_edge(eg: &EndpointGraph, a: usize, b: usize) -> bool {
    eg.adjacent(a, b)
        && eg.mark_at(a, b) != Some(Mark::Arrow)
        && eg.mark_at(b, a) != Some(Mark::Tail)
}

/// Arrowhead and tail rules applied to a fixed point.
fn zhang_closure(
    eg: &mut EndpointGraph,
    sepsets: &SeparationSets,
    diagnostics: &mut OrientDiagnostics,
) {
    loop {
        let mut changed = false;
        changed |= rule_chain_completion(eg, diagnostics);
        changed |= rule_arrow_propagation(eg, diagnostics);
        changed |= rule_double_collider(eg, diagnostics);
        changed |= rule_discriminating_path(eg, sepsets, diagnostics);
        changed |= rule_directed_shortcut(eg, diagnostics);
        changed |= rule_uncovered_pd_path(eg, diagnostics);
        changed |= rule_double_pd_path(eg, diagnostics);
        if !changed {
            break;
        }
    }
}

/// `a *-> b o-* c` with `a, c` nonadjacent orients `b -> c`.
fn rule_chain_completion(eg: &mut EndpointGraph, diagnostics: &mut OrientDiagnostics) -> bool {
    let n = eg.node_count();
    let mut changed = false;
    for b in 0..n {
        for a in 0..n {
            if a == b || !arrow_at(eg, b, a) {
                continue;
            }
            for c in 0..n {
                if c == a || c == b || !circle_at(eg, b, c) || eg.adjacent(a, c) {
                    continue;
                }
                changed |= set_mark(eg, b, c, Mark::Tail, diagnostics);
                changed |= set_mark(eg, c, b, Mark::Arrow, diagnostics);
            }
        }
    }
    changed
}

/// `a -> b *-> c` or `a *-> b -> c`, with a circle at the `c` end of `a *-o c`,
/// orients the arrowhead at `c`.
fn rule_arrow_propagation(eg: &mut EndpointGraph, diagnostics: &mut OrientDiagnostics) -> bool {
    let n = eg.node_count();
    let mut changed = false;
    for a in 0..n {
        for c in 0..n {
            if a == c || !circle_at(eg, c, a) {
                continue;
            }
            let found = (0..n).any(|b| {
                b != a
                    && b != c
                    && ((directed(eg, a, b) && arrow_at(eg, c, b))
                        || (arrow_at(eg, b, a) && directed(eg, b, c)))
            });
            if found {
                changed |= set_mark(eg, c, a, Mark::Arrow, diagnostics);
            }
        }
    }
    changed
}

/// `a *-> b <-* c` with `a *-o d o-* c`, `a, c` nonadjacent, and a circle at
/// the `b` end of `d *-o b` orients the arrowhead `d *-> b`.
fn rule_double_collider(eg: &mut EndpointGraph, diagnostics: &mut OrientDiagnostics) -> bool {
    let n = eg.node_count();
    let mut changed = false;
    for b in 0..n {
        for d in 0..n {
            if d == b || !circle_at(eg, b, d) {
                continue;
            }
            let mut fired = false;
            for a in 0..n {
                if fired || a == b || a == d || !arrow_at(eg, b, a) || !circle_at(eg, d, a) {
                    continue;
                }
                for c in 0..n {
                    if c == a || c == b || c == d {
                        continue;
                    }
                    if arrow_at(eg, b, c)
                        && circle_at(eg, d, c)
                        && !eg.adjacent(a, c)
                    {
                        changed |= set_mark(eg, b, d, Mark::Arrow, diagnostics);
                        fired = true;
                        break;
                    }
                }
            }
        }
    }
    changed
}

/// Discriminating-path rule. A path `<d, .., a, b, c>` discriminates `b`
/// when `d` and `c` are nonadjacent and every vertex between `d` and `b` is
/// both a collider on the path and a parent of `c`. If `b` sits in the
/// recorded separator of `(d, c)` the edge becomes `b -> c`; otherwise the
/// triple around `b` becomes doubly bidirected.
fn rule_discriminating_path(
    eg: &mut EndpointGraph,
    sepsets: &SeparationSets,
    diagnostics: &mut OrientDiagnostics,
) -> bool {
    let n = eg.node_count();
    let mut changed = false;
    for c in 0..n {
        for b in 0..n {
            if b == c || !circle_at(eg, b, c) {
                continue;
            }
            for a in 0..n {
                if a == b || a == c {
                    continue;
                }
                // `a` must be collider-marked toward `b` and a parent of `c`.
                if !arrow_at(eg, a, b) || !directed(eg, a, c) {
                    continue;
                }
                if let Some(d) = find_discriminating_origin(eg, a, b, c) {
                    let fire_tail = sepsets.separates(d, c, b);
                    if fire_tail {
                        changed |= set_mark(eg, b, c, Mark::Tail, diagnostics);
                        changed |= set_mark(eg, c, b, Mark::Arrow, diagnostics);
                    } else {
                        changed |= set_mark(eg, a, b, Mark::Arrow, diagnostics);
                        changed |= set_mark(eg, b, a, Mark::Arrow, diagnostics);
                        changed |= set_mark(eg, b, c, Mark::Arrow, diagnostics);
                        changed |= set_mark(eg, c, b, Mark::Arrow, diagnostics);
                    }
                }
            }
        }
    }
    changed
}

/// Searches backwards from `a` for the origin `d` of a discriminating path
/// `<d, .., a, b, c>`: interior vertices are colliders on the path and
/// parents of `c`; `d` itself is nonadjacent to `c`.
fn find_discriminating_origin(
    eg: &EndpointGraph,
    a: usize,
    b: usize,
    c: usize,
) -> Option<usize> {
    let n = eg.node_count();
    let mut on_path = vec![false; n];
    on_path[a] = true;
    on_path[b] = true;
    on_path[c] = true;
    fn search(
        eg: &EndpointGraph,
        u: usize,
        c: usize,
        on_path: &mut Vec<bool>,
    ) -> Option<usize> {
        let n = eg.node_count();
        for w in 0..n {
            if on_path[w] || !eg.adjacent(w, u) || !arrow_at(eg, u, w) {
                continue;
            }
            if !eg.adjacent(w, c) {
                return Some(w);
            }
            // Continue only through colliders that are parents of `c`.
            if directed(eg, w, c) && arrow_at(eg, w, u) {
                on_path[w] = true;
                if let Some(d) = search(eg, w, c, on_path) {
                    return Some(d);
                }
                on_path[w] = false;
            }
        }
        None
    }
    search(eg, a, c, &mut on_path)
}

/// `a -> b -> c` (or `a -o b -> c`) with `a o-> c` orients the tail `a -> c`.
fn rule_directed_shortcut(eg: &mut EndpointGraph, diagnostics: &mut OrientDiagnostics) -> bool {
    let n = eg.node_count();
    let mut changed = false;
    for a in 0..n {
        for c in 0..n {
            if a == c || !circle_at(eg, a, c) || !arrow_at(eg, c, a) {
                continue;
            }
            let found = (0..n).any(|b| {
                b != a
                    && b != c
                    && directed(eg, b, c)
                    && (directed(eg, a, b)
                        || (eg.mark_at(a, b) == Some(Mark::Tail) && circle_at(eg, b, a)))
            });
            if found {
                changed |= set_mark(eg, a, c, Mark::Tail, diagnostics);
            }
        }
    }
    changed
}

/// Uncovered potentially-directed path search. Paths start `origin, first,
/// ...` and must reach `target`; consecutive triple endpoints are nonadjacent
/// and every step is a potentially directed edge.
fn uncovered_pd_path_exists(
    eg: &EndpointGraph,
    origin: usize,
    first: usize,
    target: usize,
) -> bool {
    if first == target {
        return pd_edge(eg, origin, first);
    }
    if !pd_edge(eg, origin, first) {
        return false;
    }
    let n = eg.node_count();
    let mut on_path = vec![false; n];
    on_path[origin] = true;
    on_path[first] = true;
    fn dfs(
        eg: &EndpointGraph,
        prev: usize,
        cur: usize,
        target: usize,
        on_path: &mut Vec<bool>,
    ) -> bool {
        let n = eg.node_count();
        for next in 0..n {
            if on_path[next] || !pd_edge(eg, cur, next) || eg.adjacent(prev, next) {
                continue;
            }
            if next == target {
                return true;
            }
            on_path[next] = true;
            if dfs(eg, cur, next, target, on_path) {
                return true;
            }
            on_path[next] = false;
        }
        false
    }
    dfs(eg, origin, first, target, &mut on_path)
}

/// `a o-> c` with an uncovered potentially-directed path `<a, b, .., c>`
/// whose first interior vertex is nonadjacent to `c` orients the tail
/// `a -> c`.
fn rule_uncovered_pd_path(eg: &mut EndpointGraph, diagnostics: &mut OrientDiagnostics) -> bool {
    let n = eg.node_count();
    let mut changed = false;
    for a in 0..n {
        for c in 0..n {
            if a == c || !circle_at(eg, a, c) || !arrow_at(eg, c, a) {
                continue;
            }
            let found = (0..n).any(|b| {
                b != a
                    && b != c
                    && !eg.adjacent(b, c)
                    && uncovered_pd_path_exists(eg, a, b, c)
            });
            if found {
                changed |= set_mark(eg, a, c, Mark::Tail, diagnostics);
            }
        }
    }
    changed
}

/// Targets among `parents` reachable from `origin` via an uncovered
/// potentially-directed path starting with `first`.
fn reachable_parents(
    eg: &EndpointGraph,
    origin: usize,
    first: usize,
    parents: &[usize],
) -> Vec<usize> {
    parents
        .iter()
        .copied()
        .filter(|&p| uncovered_pd_path_exists(eg, origin, first, p))
        .collect()
}

/// `a o-> c` with `b -> c <- d`, two uncovered potentially-directed paths
/// from `a` to `b` and to `d` whose first vertices differ and are
/// nonadjacent, orients the tail `a -> c`.
fn rule_double_pd_path(eg: &mut EndpointGraph, diagnostics: &mut OrientDiagnostics) -> bool {
    let n = eg.node_count();
    let mut changed = false;
    for a in 0..n {
        for c in 0..n {
            if a == c || !circle_at(eg, a, c) || !arrow_at(eg, c, a) {
                continue;
            }
            let parents: Vec<usize> =
                (0..n).filter(|&p| p != a && p != c && directed(eg, p, c)).collect();
            if parents.len() < 2 {
                continue;
            }
            let firsts: Vec<usize> =
                (0..n).filter(|&f| f != a && f != c && pd_edge(eg, a, f)).collect();
            let mut fired = false;
            for (i, &mu) in firsts.iter().enumerate() {
                if fired {
                    break;
                }
                let reach_mu = reachable_parents(eg, a, mu, &parents);
                if reach_mu.is_empty() {
                    continue;
                }
                for &omega in &firsts[i + 1..] {
                    if eg.adjacent(mu, omega) {
                        continue;
                    }
                    let reach_omega = reachable_parents(eg, a, omega, &parents);
                    let pairs_exist = reach_mu.iter().any(|&b1| {
                        reach_omega.iter().any(|&b2| b1 != b2)
                    });
                    if pairs_exist {
                        changed |= set_mark(eg, a, c, Mark::Tail, diagnostics);
                        fired = true;
                        break;
                    }
                }
            }
        }
    }
    changed
}
