//! Conditional-independence testing: the centralized chi-squared test and its
//! federated counterpart.
//!
//! The federated test never moves raw cell counts to the server. Per
//! conditioning assignment it (i) secure-aggregates the condition counts and
//! the two margins, (ii) broadcasts the expected cell counts and a fresh
//! Gaussian projection, (iii) has each client project its standardized
//! residual vector, and (iv) secure-aggregates the projections, estimating
//! the chi-squared contribution from the squared norm of the aggregated
//! encoding via the geometric-mean estimator. An exact-aggregation mode
//! aggregates the residual vectors themselves (still sums only) to isolate
//! sketching error in tests.

use crate::data::{ClientPartition, DiscreteDataset};
use crate::secureagg::{AggError, Aggregator, FixedPointCodec, RingVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum CiError {
    #[error("invalid query: {0}")]
    Query(String),
    #[error("significance parameter must lie in (0, 1), got {0}")]
    BadAlpha(f64),
    #[error("encoding size must be at least 2, got {0}")]
    BadEncodingSize(usize),
    #[error("conditioning space of {0} assignments exceeds the supported bound")]
    CondSpaceTooLarge(u128),
    #[error("every client dropped out of the round")]
    NoSurvivors,
    #[error(transparent)]
    Agg(#[from] AggError),
}

/// A conditional-independence question `x ⊥ y | cond`. Construction
/// canonicalizes the query (`x < y`, sorted deduplicated `cond`) so callers
/// and caches agree on symmetric forms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CiQuery {
    pub x: usize,
    pub y: usize,
    pub cond: Vec<usize>,
}

impl CiQuery {
    pub fn new(x: usize, y: usize, cond: impl Into<Vec<usize>>) -> Result<Self, CiError> {
        let mut cond: Vec<usize> = cond.into();
        cond.sort_unstable();
        cond.dedup();
        if x == y || cond.contains(&x) || cond.contains(&y) {
            return Err(CiError::Query(format!(
                "x={x}, y={y} must be distinct and outside cond={cond:?}"
            )));
        }
        let (x, y) = if x < y { (x, y) } else { (y, x) };
        Ok(Self { x, y, cond })
    }

    pub fn marginal(x: usize, y: usize) -> Result<Self, CiError> {
        Self::new(x, y, Vec::new())
    }

    fn validate_for(&self, width: usize) -> Result<(), CiError> {
        for &v in [self.x, self.y].iter().chain(self.cond.iter()) {
            if v >= width {
                return Err(CiError::Query(format!(
                    "variable {v} out of range for {width} columns"
                )));
            }
        }
        Ok(())
    }
}

/// Counts for one conditioning assignment: the condition count, per-category
/// margins for the two tested variables, and the full cell table.
/// Cell tables exist only client-side; the server sees their aggregates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencySlice {
    pub z_values: Vec<u32>,
    pub total: u64,
    pub x_counts: Vec<u64>,
    pub y_counts: Vec<u64>,
    /// `x`-major `|X| x |Y|` cell counts.
    pub cell_counts: Vec<u64>,
}

/// Exact counts over the rows matching `z_values` (all rows when the
/// conditioning set is empty). Zero counts are valid.
pub fn local_counts(data: &DiscreteDataset, query: &CiQuery, z_values: &[u32]) -> ContingencySlice {
    assert_eq!(z_values.len(), query.cond.len());
    let cx = data.cardinality(query.x);
    let cy = data.cardinality(query.y);
    let mut slice = ContingencySlice {
        z_values: z_values.to_vec(),
        total: 0,
        x_counts: vec![0; cx],
        y_counts: vec![0; cy],
        cell_counts: vec![0; cx * cy],
    };
    for r in 0..data.len() {
        let row = data.row(r);
        if query.cond.iter().zip(z_values).any(|(&zc, &zv)| row[zc] != zv) {
            continue;
        }
        let xv = row[query.x] as usize;
        let yv = row[query.y] as usize;
        slice.total += 1;
        slice.x_counts[xv] += 1;
        slice.y_counts[yv] += 1;
        slice.cell_counts[xv * cy + yv] += 1;
    }
    slice
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CiMode {
    #[default]
    Sketched,
    ExactAgg,
}

impl FromStr for CiMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sketched" => Ok(CiMode::Sketched),
            "exact-agg" => Ok(CiMode::ExactAgg),
            other => Err(format!("unknown mode {other:?} (expected sketched|exact-agg)")),
        }
    }
}

impl fmt::Display for CiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CiMode::Sketched => "sketched",
            CiMode::ExactAgg => "exact-agg",
        })
    }
}

/// Norm estimator applied to the aggregated encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NormEstimator {
    /// Product of `|e_k|^(2/l)` over the unbiasing constant: the estimator
    /// whose expectation is the squared norm.
    #[default]
    GeometricMean,
    /// Sum of `|e_k|^(2/l)` over the same constant. Kept for comparison; it
    /// is not an unbiased norm estimator (see the estimator tests).
    PowerSum,
}

/// Per-assignment contribution to the test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceStat {
    pub z_values: Vec<u32>,
    pub statistic: f64,
    pub dof: usize,
    /// Cells skipped because their expected count was zero.
    pub skipped_cells: usize,
    /// Smallest expected count among contributing cells (infinite when none).
    pub min_expected: f64,
}

/// Outcome of a conditional-independence test: the statistic, its degrees of
/// freedom, and the decision, plus validity flags and the per-assignment
/// breakdown. This is the only information the federated test releases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiDecision {
    pub statistic: f64,
    pub dof: usize,
    pub alpha: f64,
    pub reject: bool,
    /// No assignment produced positive degrees of freedom.
    pub degenerate: bool,
    /// Some contributing cell had an expected count of five or less, so the
    /// classical validity rule is violated; the decision stands but is
    /// low-confidence.
    pub low_expected_count: bool,
    pub slices: Vec<SliceStat>,
    /// Secure-aggregation round ids consumed by this test, when federated.
    pub rounds: Option<(u64, u64)>,
}

impl CiDecision {
    fn degenerate_with(alpha: f64, slices: Vec<SliceStat>, rounds: Option<(u64, u64)>) -> Self {
        Self {
            statistic: 0.0,
            dof: 0,
            alpha,
            reject: false,
            degenerate: true,
            low_expected_count: false,
            slices,
            rounds,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<(), CiError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CiError::BadAlpha(alpha));
    }
    Ok(())
}

/// Upper chi-squared quantile; the rejection threshold at `dof`.
pub fn chi2_quantile(dof: usize, alpha: f64) -> f64 {
    ChiSquared::new(dof as f64)
        .expect("dof >= 1")
        .inverse_cdf(1.0 - alpha)
}

/// Decision rule shared by all modes: reject iff the statistic exceeds the
/// quantile. Zero degrees of freedom never reject.
fn decide(statistic: f64, dof: usize, alpha: f64) -> bool {
    dof > 0 && statistic > chi2_quantile(dof, alpha)
}

struct SliceSummary {
    statistic: f64,
    dof: usize,
    skipped: usize,
    min_expected: f64,
}

/// Direct evaluation of one assignment's statistic from pooled counts.
/// Per-assignment cardinalities count categories with a nonzero margin;
/// zero-expectation cells are skipped.
fn slice_statistic(total: u64, x_counts: &[u64], y_counts: &[u64], cells: &[u64]) -> SliceSummary {
    let cy = y_counts.len();
    let observed_x = x_counts.iter().filter(|&&c| c > 0).count();
    let observed_y = y_counts.iter().filter(|&&c| c > 0).count();
    let dof = observed_x.saturating_sub(1) * observed_y.saturating_sub(1);
    let mut statistic = 0.0;
    let mut skipped = 0;
    let mut min_expected = f64::INFINITY;
    for (i, &xm) in x_counts.iter().enumerate() {
        for (j, &ym) in y_counts.iter().enumerate() {
            let expected = xm as f64 * ym as f64 / total as f64;
            if expected <= 0.0 {
                skipped += 1;
                continue;
            }
            min_expected = min_expected.min(expected);
            let diff = cells[i * cy + j] as f64 - expected;
            statistic += diff * diff / expected;
        }
    }
    SliceSummary { statistic, dof, skipped, min_expected }
}

/// Mixed-radix index of a conditioning assignment (first variable most
/// significant).
fn z_index(cards: &[u32], values: &[u32]) -> u64 {
    let mut idx = 0u64;
    for (&c, &v) in cards.iter().zip(values) {
        idx = idx * c as u64 + v as u64;
    }
    idx
}

fn z_values_of(cards: &[u32], mut idx: u64) -> Vec<u32> {
    let mut out = vec![0u32; cards.len()];
    for k in (0..cards.len()).rev() {
        out[k] = (idx % cards[k] as u64) as u32;
        idx /= cards[k] as u64;
    }
    out
}

/// Pooled-data chi-squared test, also the oracle and baseline for the
/// federated path. Assignments with no observations contribute nothing; a
/// query whose every assignment is degenerate fails to reject with the
/// `degenerate` flag set.
pub fn centralized_chi2(
    data: &DiscreteDataset,
    query: &CiQuery,
    alpha: f64,
) -> Result<CiDecision, CiError> {
    check_alpha(alpha)?;
    query.validate_for(data.width())?;
    let cx = data.cardinality(query.x);
    let cy = data.cardinality(query.y);

    // Group rows by conditioning assignment in one pass.
    let mut groups: HashMap<Vec<u32>, (u64, Vec<u64>, Vec<u64>, Vec<u64>)> = HashMap::new();
    for r in 0..data.len() {
        let row = data.row(r);
        let key: Vec<u32> = query.cond.iter().map(|&c| row[c]).collect();
        let entry = groups
            .entry(key)
            .or_insert_with(|| (0, vec![0; cx], vec![0; cy], vec![0; cx * cy]));
        let xv = row[query.x] as usize;
        let yv = row[query.y] as usize;
        entry.0 += 1;
        entry.1[xv] += 1;
        entry.2[yv] += 1;
        entry.3[xv * cy + yv] += 1;
    }

    let mut keys: Vec<Vec<u32>> = groups.keys().cloned().collect();
    keys.sort();
    let mut slices = Vec::new();
    let mut statistic = 0.0;
    let mut dof = 0usize;
    let mut low_expected = false;
    for key in keys {
        let (total, x_counts, y_counts, cells) = &groups[&key];
        let s = slice_statistic(*total, x_counts, y_counts, cells);
        if s.dof > 0 {
            statistic += s.statistic;
            dof += s.dof;
            low_expected |= s.min_expected <= 5.0;
        }
        slices.push(SliceStat {
            z_values: key,
            statistic: s.statistic,
            dof: s.dof,
            skipped_cells: s.skipped,
            min_expected: s.min_expected,
        });
    }
    if dof == 0 {
        return Ok(CiDecision::degenerate_with(alpha, slices, None));
    }
    Ok(CiDecision {
        statistic,
        dof,
        alpha,
        reject: decide(statistic, dof, alpha),
        degenerate: false,
        low_expected_count: low_expected,
        slices,
        rounds: None,
    })
}

/// Dense random projection with i.i.d. standard-normal entries, broadcast
/// identically to every client of a round.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl ProjectionMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.cols + c]
    }

    /// Matrix-vector product.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.cols, "dimension mismatch");
        (0..self.rows)
            .map(|r| {
                self.entries[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(u)
                    .map(|(p, v)| p * v)
                    .sum()
            })
            .collect()
    }
}

/// Samples an `l x m` standard-normal projection, deterministic given `seed`.
/// The estimator's Gamma factor requires `l >= 2`.
pub fn make_projection(m: usize, l: usize, seed: u64) -> Result<ProjectionMatrix, CiError> {
    make_projection_from(m, l, crate::seeding::derive_seed(seed, "projection", &[]))
}

fn make_projection_from(m: usize, l: usize, seed: [u8; 32]) -> Result<ProjectionMatrix, CiError> {
    if l < 2 {
        return Err(CiError::BadEncodingSize(l));
    }
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha20Rng::from_seed(seed);
    let entries = (0..l * m).map(|_| StandardNormal.sample(&mut rng)).collect();
    Ok(ProjectionMatrix { rows: l, cols: m, entries })
}

/// Client-side encoding step: the projection of a standardized residual
/// vector.
pub fn encode(u: &[f64], projection: &ProjectionMatrix) -> Vec<f64> {
    projection.apply(u)
}

/// Natural log of the per-coordinate unbiasing constant `E|g|^(2/l)` for
/// standard normal `g`.
fn ln_gm_factor(l: usize) -> f64 {
    let inv = 1.0 / l as f64;
    inv * std::f64::consts::LN_2 + ln_gamma(0.5 + inv) - 0.5 * std::f64::consts::PI.ln()
}

/// Geometric-mean estimate of the squared Euclidean norm underlying an
/// aggregated standard-normal encoding: the product of `|e_k|^(2/l)` divided
/// by the unbiasing constant, evaluated in the log domain. Returns zero if
/// any coordinate is zero.
pub fn gm_estimate(e: &[f64], l: usize) -> f64 {
    assert_eq!(e.len(), l, "encoding length must equal l");
    if e.contains(&0.0) {
        return 0.0;
    }
    let log_prod: f64 = e.iter().map(|&v| v.abs().ln()).sum::<f64>() * 2.0 / l as f64;
    (log_prod - l as f64 * ln_gm_factor(l)).exp()
}

/// The power-sum reading of the same expression: `sum |e_k|^(2/l)` over the
/// product-form constant. Exposed for comparison only.
pub fn power_sum_estimate(e: &[f64], l: usize) -> f64 {
    assert_eq!(e.len(), l, "encoding length must equal l");
    let exponent = 2.0 / l as f64;
    let sum: f64 = e.iter().map(|&v| v.abs().powf(exponent)).sum();
    sum / (l as f64 * ln_gm_factor(l)).exp()
}

fn estimate(e: &[f64], l: usize, estimator: NormEstimator) -> f64 {
    match estimator {
        NormEstimator::GeometricMean => gm_estimate(e, l),
        NormEstimator::PowerSum => power_sum_estimate(e, l),
    }
}

/// Parameters of the federated test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FedCiParams {
    pub alpha: f64,
    /// Encoding size `l`.
    pub encoding_size: usize,
    pub mode: CiMode,
    pub seed: u64,
    #[serde(default)]
    pub estimator: NormEstimator,
}

impl FedCiParams {
    pub fn new(alpha: f64, encoding_size: usize, mode: CiMode, seed: u64) -> Self {
        Self { alpha, encoding_size, mode, seed, estimator: NormEstimator::GeometricMean }
    }
}

const MAX_COND_SPACE: u128 = 1 << 20;

/// Per-client count tables grouped by conditioning assignment, computed once
/// per query.
struct ClientTable {
    slices: HashMap<u64, ContingencySlice>,
}

fn client_table(data: &DiscreteDataset, query: &CiQuery, cond_cards: &[u32]) -> ClientTable {
    let cx = data.cardinality(query.x);
    let cy = data.cardinality(query.y);
    let mut slices: HashMap<u64, ContingencySlice> = HashMap::new();
    for r in 0..data.len() {
        let row = data.row(r);
        let z_values: Vec<u32> = query.cond.iter().map(|&c| row[c]).collect();
        let idx = z_index(cond_cards, &z_values);
        let slice = slices.entry(idx).or_insert_with(|| ContingencySlice {
            z_values,
            total: 0,
            x_counts: vec![0; cx],
            y_counts: vec![0; cy],
            cell_counts: vec![0; cx * cy],
        });
        let xv = row[query.x] as usize;
        let yv = row[query.y] as usize;
        slice.total += 1;
        slice.x_counts[xv] += 1;
        slice.y_counts[yv] += 1;
        slice.cell_counts[xv * cy + yv] += 1;
    }
    ClientTable { slices }
}

/// Standardized residual vector for one client and assignment. Cells with a
/// zero expected count are left at zero.
fn residual_vector(cells: &[u64], expected: &[f64], survivors: usize) -> Vec<f64> {
    cells
        .iter()
        .zip(expected)
        .map(|(&c, &e)| {
            if e > 0.0 {
                (c as f64 - e / survivors as f64) / e.sqrt()
            } else {
                0.0
            }
        })
        .collect()
}

/// The federated conditional-independence test.
///
/// For each conditioning assignment with a nonzero pooled count the protocol
/// aggregates condition counts and margins, broadcasts expected counts plus a
/// fresh projection, aggregates the clients' encoded residuals, and estimates
/// the per-assignment statistic. Assignment discovery itself runs through the
/// aggregated condition-count vector, so the server never learns which client
/// holds which assignment. Scripted dropouts shrink every round to the same
/// survivor set.
pub fn fed_ci_test(
    partition: &ClientPartition,
    query: &CiQuery,
    params: &FedCiParams,
    agg: &mut Aggregator,
) -> Result<CiDecision, CiError> {
    check_alpha(params.alpha)?;
    if params.encoding_size < 2 {
        return Err(CiError::BadEncodingSize(params.encoding_size));
    }
    let schema_width = partition.schema().len();
    query.validate_for(schema_width)?;

    let cond_cards: Vec<u32> =
        query.cond.iter().map(|&c| partition.schema()[c].cardinality as u32).collect();
    let z_space: u128 = cond_cards.iter().map(|&c| c as u128).product();
    if z_space > MAX_COND_SPACE {
        return Err(CiError::CondSpaceTooLarge(z_space));
    }
    let z_space = z_space as usize;

    let all_clients: Vec<usize> = (0..partition.client_count()).collect();
    let survivors = agg.survivors(&all_clients);
    if survivors.is_empty() {
        return Err(CiError::NoSurvivors);
    }
    let k_eff = survivors.len();
    let first_round = agg.rounds_run();

    // Client-side tables, computed once per query.
    let tables: HashMap<usize, ClientTable> = survivors
        .iter()
        .map(|&c| (c, client_table(&partition.clients()[c], query, &cond_cards)))
        .collect();

    // Round 1: aggregated condition counts discover the live assignments.
    let z_totals = agg.sum(&all_clients, z_space, |c| {
        let mut counts = vec![0u64; z_space];
        for (&idx, slice) in &tables[&c].slices {
            counts[idx as usize] = slice.total;
        }
        RingVector(counts)
    })?;
    let live: Vec<usize> = (0..z_space).filter(|&i| z_totals.0[i] > 0).collect();

    let cx = partition.schema()[query.x].cardinality;
    let cy = partition.schema()[query.y].cardinality;
    let m = cx * cy;

    // Round 2: margins for every live assignment, batched into one vector.
    let span = cx + cy;
    let margins = agg.sum(&all_clients, live.len() * span, |c| {
        let mut payload = vec![0u64; live.len() * span];
        for (s, &idx) in live.iter().enumerate() {
            if let Some(slice) = tables[&c].slices.get(&(idx as u64)) {
                payload[s * span..s * span + cx].copy_from_slice(&slice.x_counts);
                payload[s * span + cx..(s + 1) * span].copy_from_slice(&slice.y_counts);
            }
        }
        RingVector(payload)
    })?;

    // Broadcast values per live assignment: expected cell counts and, in
    // sketched mode, the assignment's fresh projection.
    struct SliceSetup {
        idx: usize,
        expected: Vec<f64>,
        dof: usize,
        skipped: usize,
        min_expected: f64,
        projection: Option<ProjectionMatrix>,
    }
    let mut setups = Vec::with_capacity(live.len());
    for (s, &idx) in live.iter().enumerate() {
        let total = z_totals.0[idx];
        let x_counts = &margins.0[s * span..s * span + cx];
        let y_counts = &margins.0[s * span + cx..(s + 1) * span];
        let expected: Vec<f64> = (0..cx)
            .flat_map(|i| {
                (0..cy).map(move |j| x_counts[i] as f64 * y_counts[j] as f64 / total as f64)
            })
            .collect();
        let observed_x = x_counts.iter().filter(|&&c| c > 0).count();
        let observed_y = y_counts.iter().filter(|&&c| c > 0).count();
        let projection = match params.mode {
            CiMode::ExactAgg => None,
            CiMode::Sketched => {
                let mut proj_params = vec![query.x as u64, query.y as u64];
                proj_params.extend(query.cond.iter().map(|&c| c as u64));
                proj_params.push(idx as u64);
                let proj_seed =
                    crate::seeding::derive_seed(params.seed, "projection", &proj_params);
                Some(make_projection_from(m, params.encoding_size, proj_seed)?)
            }
        };
        let skipped = expected.iter().filter(|&&e| e == 0.0).count();
        let min_expected =
            expected.iter().copied().filter(|&e| e > 0.0).fold(f64::INFINITY, f64::min);
        setups.push(SliceSetup {
            idx,
            expected,
            dof: observed_x.saturating_sub(1) * observed_y.saturating_sub(1),
            skipped,
            min_expected,
            projection,
        });
    }

    // One aggregation round carries every assignment's segment: residual
    // vectors of length m (exact mode) or encodings of length l (sketched).
    // The per-assignment sums are independent, so batching their transport
    // changes nothing the server learns.
    let codec = FixedPointCodec::default();
    let segment = match params.mode {
        CiMode::ExactAgg => m,
        CiMode::Sketched => params.encoding_size,
    };
    let mut statistic = 0.0;
    let mut dof = 0usize;
    let mut low_expected = false;
    let mut slices = Vec::with_capacity(live.len());

    if !setups.is_empty() {
        let zero_cells = vec![0u64; m];
        let combined = agg.sum(&all_clients, setups.len() * segment, |c| {
            let mut payload = Vec::with_capacity(setups.len() * segment);
            for setup in &setups {
                let cells = tables[&c]
                    .slices
                    .get(&(setup.idx as u64))
                    .map(|slice| slice.cell_counts.as_slice())
                    .unwrap_or(&zero_cells);
                let u = residual_vector(cells, &setup.expected, k_eff);
                let values = match &setup.projection {
                    Some(projection) => encode(&u, projection),
                    None => u,
                };
                for v in values {
                    payload.push(codec.encode(v).expect("residuals fit the codec range"));
                }
            }
            RingVector(payload)
        })?;

        for (s, setup) in setups.iter().enumerate() {
            let window = &combined.0[s * segment..(s + 1) * segment];
            let decoded: Vec<f64> = window.iter().map(|&w| codec.decode(w)).collect();
            let q_z = match params.mode {
                CiMode::ExactAgg => decoded.iter().map(|&v| v * v).sum(),
                CiMode::Sketched => estimate(&decoded, params.encoding_size, params.estimator),
            };
            if setup.dof > 0 {
                statistic += q_z;
                dof += setup.dof;
                low_expected |= setup.min_expected <= 5.0;
            }
            slices.push(SliceStat {
                z_values: z_values_of(&cond_cards, setup.idx as u64),
                statistic: q_z,
                dof: setup.dof,
                skipped_cells: setup.skipped,
                min_expected: setup.min_expected,
            });
        }
    }

    let rounds = Some((first_round, agg.rounds_run().saturating_sub(1)));
    if dof == 0 {
        return Ok(CiDecision::degenerate_with(params.alpha, slices, rounds));
    }
    Ok(CiDecision {
        statistic,
        dof,
        alpha: params.alpha,
        reject: decide(statistic, dof, params.alpha),
        degenerate: false,
        low_expected_count: low_expected,
        slices,
        rounds,
    })
}
