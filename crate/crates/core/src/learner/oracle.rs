//! Conditional-independence oracles: graphical (exact), centralized
//! chi-squared, federated, and per-client voting.

use crate::data::{ClientPartition, DiscreteDataset};
use crate::fedci::{centralized_chi2, fed_ci_test, CiDecision, CiError, CiQuery, FedCiParams};
use crate::graph::{d_separated, m_separated, CausalDag, Mag};
use crate::secureagg::{Aggregator, RoundTranscript};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// A decision procedure for `x ⊥ y | cond`. Queries are canonicalized by
/// [`CiQuery::new`], so implementations are symmetric in `(x, y)` for free.
pub trait CiOracle {
    /// `true` when the oracle deems the pair conditionally independent.
    fn independent(&mut self, query: &CiQuery) -> Result<bool, CiError>;

    /// Log of evaluated queries, when the oracle records them.
    fn records(&self) -> &[QueryRecord] {
        &[]
    }
}

/// One evaluated query with its decision and validity flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub x: usize,
    pub y: usize,
    pub cond: Vec<usize>,
    pub independent: bool,
    pub statistic: Option<f64>,
    pub dof: Option<usize>,
    pub degenerate: bool,
    pub low_expected_count: bool,
}

impl QueryRecord {
    fn from_decision(query: &CiQuery, decision: &CiDecision) -> Self {
        Self {
            x: query.x,
            y: query.y,
            cond: query.cond.clone(),
            independent: !decision.reject,
            statistic: Some(decision.statistic),
            dof: Some(decision.dof),
            degenerate: decision.degenerate,
            low_expected_count: decision.low_expected_count,
        }
    }

    fn graphical(query: &CiQuery, independent: bool) -> Self {
        Self {
            x: query.x,
            y: query.y,
            cond: query.cond.clone(),
            independent,
            statistic: None,
            dof: None,
            degenerate: false,
            low_expected_count: false,
        }
    }
}

/// Exact d-separation oracle over a known DAG.
pub struct DSeparationOracle<'a> {
    dag: &'a CausalDag,
    records: Vec<QueryRecord>,
}

impl<'a> DSeparationOracle<'a> {
    pub fn new(dag: &'a CausalDag) -> Self {
        Self { dag, records: Vec::new() }
    }
}

impl CiOracle for DSeparationOracle<'_> {
    fn independent(&mut self, query: &CiQuery) -> Result<bool, CiError> {
        let separated = d_separated(self.dag, query.x, query.y, &query.cond)
            .map_err(|e| CiError::Query(e.to_string()))?;
        self.records.push(QueryRecord::graphical(query, separated));
        Ok(separated)
    }

    fn records(&self) -> &[QueryRecord] {
        &self.records
    }
}

/// Exact m-separation oracle over a known MAG.
pub struct MSeparationOracle<'a> {
    mag: &'a Mag,
    records: Vec<QueryRecord>,
}

impl<'a> MSeparationOracle<'a> {
    pub fn new(mag: &'a Mag) -> Self {
        Self { mag, records: Vec::new() }
    }
}

impl CiOracle for MSeparationOracle<'_> {
    fn independent(&mut self, query: &CiQuery) -> Result<bool, CiError> {
        let separated = m_separated(self.mag, query.x, query.y, &query.cond)
            .map_err(|e| CiError::Query(e.to_string()))?;
        self.records.push(QueryRecord::graphical(query, separated));
        Ok(separated)
    }

    fn records(&self) -> &[QueryRecord] {
        &self.records
    }
}

/// Centralized chi-squared oracle over one dataset.
pub struct Chi2Oracle<'a> {
    data: &'a DiscreteDataset,
    alpha: f64,
    records: Vec<QueryRecord>,
}

impl<'a> Chi2Oracle<'a> {
    pub fn new(data: &'a DiscreteDataset, alpha: f64) -> Self {
        Self { data, alpha, records: Vec::new() }
    }
}

impl CiOracle for Chi2Oracle<'_> {
    fn independent(&mut self, query: &CiQuery) -> Result<bool, CiError> {
        let decision = centralized_chi2(self.data, query, self.alpha)?;
        self.records.push(QueryRecord::from_decision(query, &decision));
        Ok(!decision.reject)
    }

    fn records(&self) -> &[QueryRecord] {
        &self.records
    }
}

/// Federated oracle: each query runs the secure-aggregated test over the
/// partition, with projection seeds derived from the query so results do not
/// depend on evaluation order.
pub struct FedCiOracle<'a> {
    partition: &'a ClientPartition,
    params: FedCiParams,
    agg: Aggregator,
    records: Vec<QueryRecord>,
}

impl<'a> FedCiOracle<'a> {
    pub fn new(partition: &'a ClientPartition, params: FedCiParams) -> Self {
        let agg = Aggregator::new(crate::seeding::derive_u64(params.seed, "aggregator", &[]));
        Self { partition, params, agg, records: Vec::new() }
    }

    /// Marks clients dropped for every round of this oracle's lifetime.
    pub fn with_dropout(mut self, clients: impl IntoIterator<Item = usize>) -> Self {
        self.agg.script_dropout(clients);
        self
    }

    pub fn transcripts(&self) -> &[RoundTranscript] {
        self.agg.transcripts()
    }

    pub fn take_transcripts(&mut self) -> Vec<RoundTranscript> {
        self.agg.take_transcripts()
    }
}

impl CiOracle for FedCiOracle<'_> {
    fn independent(&mut self, query: &CiQuery) -> Result<bool, CiError> {
        let decision = fed_ci_test(self.partition, query, &self.params, &mut self.agg)?;
        self.records.push(QueryRecord::from_decision(query, &decision));
        Ok(!decision.reject)
    }

    fn records(&self) -> &[QueryRecord] {
        &self.records
    }
}

/// Voting baseline oracle: each client runs the centralized test on its own
/// data and the majority of non-degenerate decisions wins. Degenerate local
/// tests abstain; with no votes cast the pair counts as independent, matching
/// the degenerate convention of the centralized test. Ties keep the edge.
pub struct CitVotingOracle<'a> {
    partition: &'a ClientPartition,
    alpha: f64,
    records: Vec<QueryRecord>,
}

impl<'a> CitVotingOracle<'a> {
    pub fn new(partition: &'a ClientPartition, alpha: f64) -> Self {
        Self { partition, alpha, records: Vec::new() }
    }
}

impl CiOracle for CitVotingOracle<'_> {
    fn independent(&mut self, query: &CiQuery) -> Result<bool, CiError> {
        let mut votes_independent = 0usize;
        let mut votes_dependent = 0usize;
        for client in self.partition.clients() {
            let decision = centralized_chi2(client, query, self.alpha)?;
            if decision.degenerate {
                continue;
            }
            if decision.reject {
                votes_dependent += 1;
            } else {
                votes_independent += 1;
            }
        }
        let independent =
            votes_independent + votes_dependent == 0 || votes_independent > votes_dependent;
        self.records.push(QueryRecord {
            x: query.x,
            y: query.y,
            cond: query.cond.clone(),
            independent,
            statistic: None,
            dof: None,
            degenerate: votes_independent + votes_dependent == 0,
            low_expected_count: false,
        });
        Ok(independent)
    }

    fn records(&self) -> &[QueryRecord] {
        &self.records
    }
}

/// Memoizing wrapper keyed by the canonical query. Never changes decisions,
/// only skips repeated evaluations; the inner record log therefore holds each
/// distinct query once.
pub struct CachedOracle<O: CiOracle> {
    inner: O,
    cache: HashMap<CiQuery, bool>,
}

impl<O: CiOracle> CachedOracle<O> {
    pub fn new(inner: O) -> Self {
        Self { inner, cache: HashMap::new() }
    }

    pub fn into_inner(self) -> O {
        self.inner
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    pub fn inner_mut(&mut self) -> &mut O {
        &mut self.inner
    }
}

impl<O: CiOracle> CiOracle for CachedOracle<O> {
    fn independent(&mut self, query: &CiQuery) -> Result<bool, CiError> {
        if let Some(&hit) = self.cache.get(query) {
            return Ok(hit);
        }
        let result = self.inner.independent(query)?;
        self.cache.insert(query.clone(), result);
        Ok(result)
    }

    fn records(&self) -> &[QueryRecord] {
        self.inner.records()
    }
}
