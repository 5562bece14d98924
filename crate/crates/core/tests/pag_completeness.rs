//! Exhaustive equivalence-class oracle for the PAG construction.
//!
//! Over all maximal ancestral graphs on four nodes: group them by their full
//! m-separation signature, build the true class pattern by taking the mark
//! consensus across members (an endpoint mark is invariant iff every member
//! agrees), and require the FCI-based construction to reproduce it exactly.
//! This checks both soundness (no mark claimed that varies in the class) and
//! completeness (every invariant mark found) of the orientation rules.

use fedcausal::graph::{m_separated, mag_to_pag, Mag, Mark, Pattern, PatternKind};
use std::collections::HashMap;

const N: usize = 4;

fn pairs() -> Vec<(usize, usize)> {
    (0..N).flat_map(|a| (a + 1..N).map(move |b| (a, b))).collect()
}

/// All mixed graphs over `N` nodes whose every edge is directed or
/// bidirected and which pass the ancestral validity checks.
fn all_ancestral_graphs() -> Vec<Mag> {
    let pairs = pairs();
    let mut out = Vec::new();
    let total = 4usize.pow(pairs.len() as u32);
    for code in 0..total {
        let mut c = code;
        let mut edges = Vec::new();
        for &(a, b) in &pairs {
            match c % 4 {
                1 => edges.push((a, Mark::Tail, Mark::Arrow, b)),
                2 => edges.push((a, Mark::Arrow, Mark::Tail, b)),
                3 => edges.push((a, Mark::Arrow, Mark::Arrow, b)),
                _ => {}
            }
            c /= 4;
        }
        if let Ok(mag) = Mag::new(N, &edges) {
            out.push(mag);
        }
    }
    out
}

fn subsets(pool: &[usize]) -> Vec<Vec<usize>> {
    (0..1u32 << pool.len())
        .map(|mask| {
            pool.iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &v)| v)
                .collect()
        })
        .collect()
}

/// Bitmask over every (pair, conditioning subset) m-separation statement.
fn signature(mag: &Mag) -> u32 {
    let mut bits = 0u32;
    let mut bit = 0;
    for (x, y) in pairs() {
        let rest: Vec<usize> = (0..N).filter(|&v| v != x && v != y).collect();
        for cond in subsets(&rest) {
            if m_separated(mag, x, y, &cond).unwrap() {
                bits |= 1 << bit;
            }
            bit += 1;
        }
    }
    bits
}

/// Maximality: every nonadjacent pair admits some separating subset.
fn is_maximal(mag: &Mag) -> bool {
    for (x, y) in pairs() {
        if mag.adjacent(x, y) {
            continue;
        }
        let rest: Vec<usize> = (0..N).filter(|&v| v != x && v != y).collect();
        if !subsets(&rest).iter().any(|cond| m_separated(mag, x, y, cond).unwrap()) {
            return false;
        }
    }
    true
}

/// The class pattern: shared skeleton with each endpoint mark set to the
/// members' common value, or a circle where members disagree.
fn consensus_pattern(members: &[&Mag]) -> Pattern {
    let first = members[0];
    let mut edges = Vec::new();
    for (a, b) in pairs() {
        assert!(
            members.iter().all(|m| m.adjacent(a, b) == first.adjacent(a, b)),
            "equivalent graphs must share a skeleton"
        );
        if !first.adjacent(a, b) {
            continue;
        }
        let consensus = |end: usize, other: usize| {
            let mark = members[0].mark_at(end, other).unwrap();
            if members.iter().all(|m| m.mark_at(end, other) == Some(mark)) {
                mark
            } else {
                Mark::Circle
            }
        };
        edges.push((a, consensus(a, b), consensus(b, a), b));
    }
    Pattern::new(PatternKind::Pag, N, &edges).unwrap()
}

#[test]
fn fci_construction_matches_the_class_consensus_exhaustively() {
    let mags = all_ancestral_graphs();
    let maximal: Vec<Mag> = mags.into_iter().filter(is_maximal).collect();
    assert!(maximal.len() > 500, "unexpectedly few maximal graphs: {}", maximal.len());

    let mut classes: HashMap<u32, Vec<&Mag>> = HashMap::new();
    for mag in &maximal {
        classes.entry(signature(mag)).or_default().push(mag);
    }
    assert!(classes.len() > 50, "unexpectedly few classes: {}", classes.len());

    for (sig, members) in &classes {
        let truth = consensus_pattern(members);
        for representative in members {
            let learned = mag_to_pag(representative);
            assert_eq!(
                learned, truth,
                "class {sig:#x} ({} members): construction disagrees with consensus",
                members.len()
            );
        }
    }
}
