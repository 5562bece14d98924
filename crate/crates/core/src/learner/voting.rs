//! Learner entry points: federated PC/FCI, their centralized counterparts,
//! and the graph- and test-voting baselines.

use super::{
    fci_learn, pc_learn, CachedOracle, Chi2Oracle, CiOracle, CitVotingOracle, FedCiOracle,
    LearnError, LearnerConfig, OrientDiagnostics, QueryRecord, SepsetEntry, SeparationSets,
};
use crate::data::{ClientPartition, DiscreteDataset};
use crate::fedci::{CiMode, FedCiParams};
use crate::graph::{Mark, Pattern, PatternKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Reproducibility record for one learning run: every evaluated query with
/// its decision and validity flags, the recorded separators, and orientation
/// diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub algorithm: String,
    pub alpha: f64,
    pub encoding_size: Option<usize>,
    pub mode: Option<CiMode>,
    pub seed: Option<u64>,
    pub ci_queries: usize,
    pub queries: Vec<QueryRecord>,
    pub sepsets: Vec<SepsetEntry>,
    pub diagnostics: OrientDiagnostics,
}

#[derive(Debug, Clone)]
pub struct LearnRun {
    pub pattern: Pattern,
    pub manifest: RunManifest,
}

fn manifest(
    algorithm: &str,
    alpha: f64,
    fed: Option<&FedCiParams>,
    records: Vec<QueryRecord>,
    sepsets: &SeparationSets,
    diagnostics: OrientDiagnostics,
) -> RunManifest {
    RunManifest {
        algorithm: algorithm.to_string(),
        alpha,
        encoding_size: fed.map(|p| p.encoding_size),
        mode: fed.map(|p| p.mode),
        seed: fed.map(|p| p.seed),
        ci_queries: records.len(),
        queries: records,
        sepsets: sepsets.entries(),
        diagnostics,
    }
}

/// Centralized PC on pooled data.
pub fn pc_centralized(
    data: &DiscreteDataset,
    alpha: f64,
    cfg: &LearnerConfig,
) -> Result<LearnRun, LearnError> {
    let mut oracle = CachedOracle::new(Chi2Oracle::new(data, alpha));
    let result = pc_learn(&mut oracle, data.width(), cfg)?;
    let records = oracle.records().to_vec();
    Ok(LearnRun {
        pattern: result.pattern,
        manifest: manifest("pc", alpha, None, records, &result.sepsets, result.diagnostics),
    })
}

/// Centralized FCI on pooled data.
pub fn fci_centralized(
    data: &DiscreteDataset,
    alpha: f64,
    cfg: &LearnerConfig,
) -> Result<LearnRun, LearnError> {
    let mut oracle = CachedOracle::new(Chi2Oracle::new(data, alpha));
    let result = fci_learn(&mut oracle, data.width(), cfg)?;
    let records = oracle.records().to_vec();
    Ok(LearnRun {
        pattern: result.pattern,
        manifest: manifest("fci", alpha, None, records, &result.sepsets, result.diagnostics),
    })
}

/// PC driven by the federated conditional-independence test.
pub fn fedpc(
    partition: &ClientPartition,
    params: &FedCiParams,
    cfg: &LearnerConfig,
    dropout: &[usize],
) -> Result<LearnRun, LearnError> {
    let inner = FedCiOracle::new(partition, *params).with_dropout(dropout.iter().copied());
    let mut oracle = CachedOracle::new(inner);
    let result = pc_learn(&mut oracle, partition.schema().len(), cfg)?;
    let records = oracle.records().to_vec();
    Ok(LearnRun {
        pattern: result.pattern,
        manifest: manifest(
            "fedpc",
            params.alpha,
            Some(params),
            records,
            &result.sepsets,
            result.diagnostics,
        ),
    })
}

/// FCI driven by the federated conditional-independence test.
pub fn fedfci(
    partition: &ClientPartition,
    params: &FedCiParams,
    cfg: &LearnerConfig,
    dropout: &[usize],
) -> Result<LearnRun, LearnError> {
    let inner = FedCiOracle::new(partition, *params).with_dropout(dropout.iter().copied());
    let mut oracle = CachedOracle::new(inner);
    let result = fci_learn(&mut oracle, partition.schema().len(), cfg)?;
    let records = oracle.records().to_vec();
    Ok(LearnRun {
        pattern: result.pattern,
        manifest: manifest(
            "fedfci",
            params.alpha,
            Some(params),
            records,
            &result.sepsets,
            result.diagnostics,
        ),
    })
}

/// Majority vote over locally learned patterns: an edge survives when more
/// than half the clients assert it; endpoint marks follow the plurality of
/// asserting clients with ties falling back to the neutral mark of the
/// pattern kind (tail-tail for CPDAGs, circle-circle for PAGs).
pub fn vote_patterns(locals: &[Pattern], kind: PatternKind) -> Pattern {
    let n = locals[0].node_count();
    let k = locals.len();
    let neutral = match kind {
        PatternKind::Cpdag => Mark::Tail,
        PatternKind::Pag => Mark::Circle,
    };
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let asserting: Vec<&Pattern> =
                locals.iter().filter(|p| p.adjacent(a, b)).collect();
            if asserting.len() * 2 <= k {
                continue;
            }
            let mut tally: BTreeMap<(Mark, Mark), usize> = BTreeMap::new();
            for p in &asserting {
                let marks = (p.mark_at(a, b).unwrap(), p.mark_at(b, a).unwrap());
                *tally.entry(marks).or_default() += 1;
            }
            let best = tally.values().copied().max().unwrap_or(0);
            let winners: Vec<(Mark, Mark)> = tally
                .iter()
                .filter(|(_, &count)| count == best)
                .map(|(&marks, _)| marks)
                .collect();
            let (ma, mb) =
                if winners.len() == 1 { winners[0] } else { (neutral, neutral) };
            edges.push((a, ma, mb, b));
        }
    }
    Pattern::new(kind, n, &edges).expect("voted marks are valid for the kind")
}

fn voting_run(
    partition: &ClientPartition,
    alpha: f64,
    cfg: &LearnerConfig,
    kind: PatternKind,
    algorithm: &str,
) -> Result<LearnRun, LearnError> {
    let d = partition.schema().len();
    let mut locals = Vec::with_capacity(partition.client_count());
    let mut records = Vec::new();
    let mut diagnostics = OrientDiagnostics::default();
    for client in partition.clients() {
        let mut oracle = CachedOracle::new(Chi2Oracle::new(client, alpha));
        let (pattern, diag) = match kind {
            PatternKind::Cpdag => {
                let r = pc_learn(&mut oracle, d, cfg)?;
                (r.pattern, r.diagnostics)
            }
            PatternKind::Pag => {
                let r = fci_learn(&mut oracle, d, cfg)?;
                (r.pattern, r.diagnostics)
            }
        };
        records.extend_from_slice(oracle.records());
        diagnostics.vstructure_conflicts += diag.vstructure_conflicts;
        diagnostics.orientation_conflicts += diag.orientation_conflicts;
        locals.push(pattern);
    }
    let pattern = vote_patterns(&locals, kind);
    Ok(LearnRun {
        pattern,
        manifest: manifest(algorithm, alpha, None, records, &SeparationSets::new(), diagnostics),
    })
}

/// Per-client PC followed by a majority vote over the local CPDAGs.
pub fn pc_voting(
    partition: &ClientPartition,
    alpha: f64,
    cfg: &LearnerConfig,
) -> Result<LearnRun, LearnError> {
    voting_run(partition, alpha, cfg, PatternKind::Cpdag, "pc-voting")
}

/// Per-client FCI followed by a majority vote over the local PAGs.
pub fn fci_voting(
    partition: &ClientPartition,
    alpha: f64,
    cfg: &LearnerConfig,
) -> Result<LearnRun, LearnError> {
    voting_run(partition, alpha, cfg, PatternKind::Pag, "fci-voting")
}

fn cit_voting_run(
    partition: &ClientPartition,
    alpha: f64,
    cfg: &LearnerConfig,
    kind: PatternKind,
    algorithm: &str,
) -> Result<LearnRun, LearnError> {
    let d = partition.schema().len();
    let mut oracle = CachedOracle::new(CitVotingOracle::new(partition, alpha));
    let (pattern, sepsets, diagnostics) = match kind {
        PatternKind::Cpdag => {
            let r = pc_learn(&mut oracle, d, cfg)?;
            (r.pattern, r.sepsets, r.diagnostics)
        }
        PatternKind::Pag => {
            let r = fci_learn(&mut oracle, d, cfg)?;
            (r.pattern, r.sepsets, r.diagnostics)
        }
    };
    let records = oracle.records().to_vec();
    Ok(LearnRun {
        pattern,
        manifest: manifest(algorithm, alpha, None, records, &sepsets, diagnostics),
    })
}

/// PC over the per-query majority vote of per-client chi-squared decisions.
pub fn pc_cit_voting(
    partition: &ClientPartition,
    alpha: f64,
    cfg: &LearnerConfig,
) -> Result<LearnRun, LearnError> {
    cit_voting_run(partition, alpha, cfg, PatternKind::Cpdag, "pc-cit-voting")
}

/// FCI over the per-query majority vote of per-client chi-squared decisions.
pub fn fci_cit_voting(
    partition: &ClientPartition,
    alpha: f64,
    cfg: &LearnerConfig,
) -> Result<LearnRun, LearnError> {
    cit_voting_run(partition, alpha, cfg, PatternKind::Pag, "fci-cit-voting")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::partition_iid;
    use crate::graph::default_schema;

    fn strongly_dependent_dataset(n: usize, seed: u64) -> DiscreteDataset {
        let g = crate::graph::CausalDag::new(3, &[(0, 1), (1, 2)]).unwrap();
        let schema = default_schema(3, 2);
        let cpds = vec![
            crate::data::Cpd::new(0, vec![], vec![], 2, vec![0.5, 0.5]).unwrap(),
            crate::data::Cpd::new(1, vec![0], vec![2], 2, vec![0.9, 0.1, 0.1, 0.9]).unwrap(),
            crate::data::Cpd::new(2, vec![1], vec![2], 2, vec![0.9, 0.1, 0.1, 0.9]).unwrap(),
        ];
        crate::data::forward_sample(&g, &schema, &cpds, n, seed).unwrap()
    }

    #[test]
    fn voting_with_one_client_equals_local_pc() {
        let data = strongly_dependent_dataset(2000, 4);
        let part = partition_iid(&data, 1, 0).unwrap();
        let voted = pc_voting(&part, 0.05, &LearnerConfig::unlimited()).unwrap();
        let local =
            pc_centralized(&part.clients()[0], 0.05, &LearnerConfig::unlimited()).unwrap();
        assert_eq!(voted.pattern, local.pattern);
    }

    #[test]
    fn voting_with_identical_clients_equals_centralized() {
        let data = strongly_dependent_dataset(1500, 9);
        let clients = vec![data.clone(), data.clone(), data.clone()];
        let part = ClientPartition::new(clients).unwrap();
        let voted = pc_voting(&part, 0.05, &LearnerConfig::unlimited()).unwrap();
        let central = pc_centralized(&data, 0.05, &LearnerConfig::unlimited()).unwrap();
        assert_eq!(voted.pattern, central.pattern);
    }

    #[test]
    fn vote_patterns_majority_and_ties() {
        let directed =
            Pattern::new(PatternKind::Cpdag, 2, &[(0, Mark::Tail, Mark::Arrow, 1)]).unwrap();
        let reversed =
            Pattern::new(PatternKind::Cpdag, 2, &[(0, Mark::Arrow, Mark::Tail, 1)]).unwrap();
        let empty = Pattern::empty(PatternKind::Cpdag, 2).unwrap();

        // 2 of 3 assert the edge: kept; marks tie 1-1 so the edge is undirected.
        let voted = vote_patterns(&[directed.clone(), reversed, empty.clone()], PatternKind::Cpdag);
        assert!(voted.is_undirected(0, 1));

        // 1 of 3 asserts: dropped.
        let voted = vote_patterns(&[directed, empty.clone(), empty], PatternKind::Cpdag);
        assert!(!voted.adjacent(0, 1));
    }
}
