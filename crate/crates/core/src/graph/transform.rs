//! Equivalence-class constructions and random graph synthesis.

use super::{check_node, CausalDag, EndpointGraph, GraphError, Mag, Mark, Pattern, PatternKind};
use crate::graph::separation::d_separated;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// CPDAG of the Markov equivalence class of `g`: skeleton plus compelled
/// orientations (v-structures, then completion rules to a fixed point).
pub fn dag_to_cpdag(g: &CausalDag) -> Pattern {
    let n = g.node_count();
    let mut eg = EndpointGraph::new(n);
    for (a, b) in g.edges() {
        eg.set_edge(a, Mark::Tail, Mark::Tail, b);
    }
    // V-structures read off the DAG never conflict with one another.
    for (x, z, y) in g.v_structures() {
        eg.set_edge(x, Mark::Tail, Mark::Arrow, z);
        eg.set_edge(y, Mark::Tail, Mark::Arrow, z);
    }
    meek_closure(&mut eg);
    Pattern::from_endpoint_graph(PatternKind::Cpdag, eg)
}

/// Orientation completion on a partially directed graph whose edges are
/// tail-tail (undirected) or tail-arrow (directed). Runs the four standard
/// rules until none applies. Only undirected edges are ever oriented, so the
/// closure is order-independent.
pub(crate) fn meek_closure(g: &mut EndpointGraph) {
    let n = g.node_count();
    let mut changed = true;
    while changed {
        changed = false;

        // R1: a -> b - c with a, c nonadjacent orients b -> c.
        for a in 0..n {
            for b in 0..n {
                if !g.is_directed(a, b) {
                    continue;
                }
                for c in 0..n {
                    if c != a && is_undirected(g, b, c) && !g.adjacent(a, c) {
                        g.set_edge(b, Mark::Tail, Mark::Arrow, c);
                        changed = true;
                    }
                }
            }
        }

        // R2: a -> c -> b with a - b orients a -> b.
        for a in 0..n {
            for b in 0..n {
                if !is_undirected(g, a, b) {
                    continue;
                }
                if (0..n).any(|c| g.is_directed(a, c) && g.is_directed(c, b)) {
                    g.set_edge(a, Mark::Tail, Mark::Arrow, b);
                    changed = true;
                }
            }
        }

        // R3: a - b with a - c -> b, a - d -> b and c, d nonadjacent orients a -> b.
        for a in 0..n {
            for b in 0..n {
                if !is_undirected(g, a, b) {
                    continue;
                }
                let spokes: Vec<usize> = (0..n)
                    .filter(|&c| is_undirected(g, a, c) && g.is_directed(c, b))
                    .collect();
                let found = spokes.iter().enumerate().any(|(i, &c)| {
                    spokes[i + 1..].iter().any(|&d| !g.adjacent(c, d))
                });
                if found {
                    g.set_edge(a, Mark::Tail, Mark::Arrow, b);
                    changed = true;
                }
            }
        }

        // R4: a - b with a - c, c -> d, d -> b, a and d adjacent, b and c
        // nonadjacent orients a -> b. (If b -> a held, acyclicity would force
        // d -> a then c -> a, creating a new unshielded collider b -> a <- c.)
        for a in 0..n {
            for b in 0..n {
                if !is_undirected(g, a, b) {
                    continue;
                }
                'search: for c in 0..n {
                    if !is_undirected(g, a, c) || g.adjacent(b, c) || b == c {
                        continue;
                    }
                    for d in 0..n {
                        if g.is_directed(c, d) && g.is_directed(d, b) && g.adjacent(a, d) {
                            g.set_edge(a, Mark::Tail, Mark::Arrow, b);
                            changed = true;
                            break 'search;
                        }
                    }
                }
            }
        }
    }
}

fn is_undirected(g: &EndpointGraph, a: usize, b: usize) -> bool {
    g.mark_at(a, b) == Some(Mark::Tail) && g.mark_at(b, a) == Some(Mark::Tail)
}

/// Marginalises a DAG onto its observed nodes: `a` and `b` stay adjacent iff
/// no subset of their observed ancestors separates them, with endpoint marks
/// taken from the ancestor relation in `g`. Node indices in the result follow
/// the ascending order of the observed nodes.
pub fn dag_to_mag(g: &CausalDag, latent: &[usize]) -> Result<Mag, GraphError> {
    let n = g.node_count();
    for &l in latent {
        check_node(l, n)?;
    }
    let is_latent: Vec<bool> = {
        let mut v = vec![false; n];
        for &l in latent {
            v[l] = true;
        }
        v
    };
    let observed: Vec<usize> = (0..n).filter(|&v| !is_latent[v]).collect();
    if observed.is_empty() {
        return Err(GraphError::NoObservedNodes);
    }
    let mut new_index = vec![usize::MAX; n];
    for (i, &v) in observed.iter().enumerate() {
        new_index[v] = i;
    }

    let mut edges = Vec::new();
    for (i, &a) in observed.iter().enumerate() {
        for &b in &observed[i + 1..] {
            let anc = g.ancestors_of_set(&[a, b]);
            let pool: Vec<usize> = observed
                .iter()
                .copied()
                .filter(|&v| v != a && v != b && anc[v])
                .collect();
            if separable_by_subset(g, a, b, &pool) {
                continue;
            }
            let mark_a = if g.is_ancestor_of(a, b) { Mark::Tail } else { Mark::Arrow };
            let mark_b = if g.is_ancestor_of(b, a) { Mark::Tail } else { Mark::Arrow };
            edges.push((new_index[a], mark_a, mark_b, new_index[b]));
        }
    }
    Mag::new(observed.len(), &edges)
}

fn separable_by_subset(g: &CausalDag, a: usize, b: usize, pool: &[usize]) -> bool {
    assert!(pool.len() < 26, "marginalisation pool too large for enumeration");
    let mut cond = Vec::with_capacity(pool.len());
    for mask in 0u64..(1u64 << pool.len()) {
        cond.clear();
        for (k, &v) in pool.iter().enumerate() {
            if mask >> k & 1 == 1 {
                cond.push(v);
            }
        }
        if d_separated(g, a, b, &cond).expect("validated query") {
            return true;
        }
    }
    false
}

/// PAG of the Markov equivalence class of `m`, realised by running the FCI
/// learner against the exact m-separation oracle of `m`.
pub fn mag_to_pag(m: &Mag) -> Pattern {
    let mut oracle = crate::learner::MSeparationOracle::new(m);
    let cfg = crate::learner::LearnerConfig::unlimited();
    crate::learner::fci_learn(&mut oracle, m.node_count(), &cfg)
        .expect("graphical oracle cannot fail")
        .pattern
}

/// Erdős–Rényi DAG: a uniformly random permutation fixes a topological
/// order, then each forward pair becomes an edge independently with
/// `edge_prob`. Deterministic given `seed`.
pub fn random_er_dag(d: usize, edge_prob: f64, seed: u64) -> Result<CausalDag, GraphError> {
    if d == 0 {
        return Err(GraphError::Empty);
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(GraphError::InvalidProbability(edge_prob));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..d).collect();
    // Fisher-Yates on the topological order.
    for i in (1..d).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut edges = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            if rng.random::<f64>() < edge_prob {
                edges.push((order[i], order[j]));
            }
        }
    }
    CausalDag::new(d, &edges)
}

/// Edge probability giving an expected average degree in an ER DAG over `d` nodes.
pub fn er_prob_for_expected_degree(d: usize, degree: f64) -> f64 {
    if d <= 1 {
        return 0.0;
    }
    (degree / (d as f64 - 1.0)).clamp(0.0, 1.0)
}
