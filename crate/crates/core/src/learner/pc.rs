//! PC orientation: v-structures from separating sets, then completion rules.

use super::{
    skeleton, CiOracle, LearnError, LearnerConfig, OrientDiagnostics, SeparationSets,
    SkeletonGraph,
};
use crate::graph::{EndpointGraph, Mark, Pattern, PatternKind};

#[derive(Debug, Clone)]
pub struct PcResult {
    pub pattern: Pattern,
    pub sepsets: SeparationSets,
    pub diagnostics: OrientDiagnostics,
}

/// Orients a skeleton into a CPDAG. Unshielded triples `x - z - y` become
/// colliders when `z` is missing from the recorded separator of `(x, y)`;
/// completion rules then run to a fixed point. Conflicting collider claims
/// resolve first-committed-wins under the canonical `(z, x, y)` scan order
/// and are counted in the diagnostics.
pub fn orient_pc(graph: &SkeletonGraph, sepsets: &SeparationSets) -> (Pattern, OrientDiagnostics) {
    let n = graph.node_count();
    let mut eg = EndpointGraph::new(n);
    for (a, b) in graph.edges() {
        eg.set_edge(a, Mark::Tail, Mark::Tail, b);
    }
    let mut diagnostics = OrientDiagnostics::default();

    for z in 0..n {
        let nb = graph.neighbors(z);
        for (i, &x) in nb.iter().enumerate() {
            for &y in &nb[i + 1..] {
                if graph.adjacent(x, y) || sepsets.separates(x, y, z) {
                    continue;
                }
                for spoke in [x, y] {
                    if eg.is_directed(z, spoke) {
                        diagnostics.vstructure_conflicts += 1;
                    } else {
                        eg.set_edge(spoke, Mark::Tail, Mark::Arrow, z);
                    }
                }
            }
        }
    }

    crate::graph::meek_closure(&mut eg);
    (Pattern::from_endpoint_graph(PatternKind::Cpdag, eg), diagnostics)
}

/// Skeleton search plus orientation against one oracle.
pub fn pc_learn(
    oracle: &mut dyn CiOracle,
    d: usize,
    cfg: &LearnerConfig,
) -> Result<PcResult, LearnError> {
    let (graph, sepsets) = skeleton(oracle, d, cfg.max_cond)?;
    let (pattern, diagnostics) = orient_pc(&graph, &sepsets);
    Ok(PcResult { pattern, sepsets, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{dag_to_cpdag, random_er_dag, CausalDag};
    use crate::learner::DSeparationOracle;

    fn oracle_pc(dag: &CausalDag) -> Pattern {
        let mut oracle = DSeparationOracle::new(dag);
        pc_learn(&mut oracle, dag.node_count(), &LearnerConfig::unlimited())
            .unwrap()
            .pattern
    }

    #[test]
    fn collider_is_oriented() {
        let dag = CausalDag::new(3, &[(0, 1), (2, 1)]).unwrap();
        let p = oracle_pc(&dag);
        assert!(p.is_directed(0, 1));
        assert!(p.is_directed(2, 1));
    }

    #[test]
    fn chain_stays_undirected() {
        let dag = CausalDag::new(3, &[(0, 1), (1, 2)]).unwrap();
        let p = oracle_pc(&dag);
        assert!(p.is_undirected(0, 1));
        assert!(p.is_undirected(1, 2));
    }

    #[test]
    fn oracle_pipeline_matches_cpdag_construction() {
        for seed in 0..25 {
            let dag = random_er_dag(10, 0.2, 1000 + seed).unwrap();
            assert_eq!(oracle_pc(&dag), dag_to_cpdag(&dag), "seed {seed}");
        }
    }
}
