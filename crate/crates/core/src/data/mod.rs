//! Discrete datasets, synthetic data generation, and client partitioning.

mod csv_io;

pub use csv_io::{
    load_csv, load_csv_reader, numeric_csv_schema, write_csv, write_csv_writer, CsvColumn,
    CsvSchema,
};

use crate::graph::{CausalDag, GraphError, VariableMeta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("row {row}, column {col}: value {value} exceeds cardinality {cardinality}")]
    CellOutOfRange { row: usize, col: usize, value: u32, cardinality: usize },
    #[error("row {row}: expected {expected} fields, got {got}")]
    RaggedRow { row: usize, expected: usize, got: usize },
    #[error("row {row}: unknown category {value:?} for column {column:?}")]
    UnknownCategory { row: usize, column: String, value: String },
    #[error("column {0:?} has fewer than 2 categories")]
    ConstantColumn(String),
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("Dirichlet concentration must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("cannot split {n} rows into {k} clients")]
    BadPartition { n: usize, k: usize },
    #[error("missing CPD for variable {0}")]
    MissingCpd(usize),
    #[error("CPD for variable {variable} has wrong shape: {detail}")]
    CpdShape { variable: usize, detail: String },
    #[error("schemas differ between clients")]
    SchemaMismatch,
    #[error("surrogate cardinality {got} must equal the client count {clients}")]
    SurrogateCardinality { got: usize, clients: usize },
    #[error("probability row {row} sums to {sum}, expected 1")]
    UnnormalisedRow { row: usize, sum: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] ::csv::Error),
}

/// A rectangular table of category indices with per-variable cardinalities.
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteDataset {
    schema: Vec<VariableMeta>,
    n: usize,
    /// Row-major `n x d` category indices.
    values: Vec<u32>,
}

impl DiscreteDataset {
    pub fn new(schema: Vec<VariableMeta>, rows: Vec<Vec<u32>>) -> Result<Self, DataError> {
        let d = schema.len();
        let mut values = Vec::with_capacity(rows.len() * d);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(DataError::RaggedRow { row: r, expected: d, got: row.len() });
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(schema, rows.len(), values)
    }

    pub fn from_flat(
        schema: Vec<VariableMeta>,
        n: usize,
        values: Vec<u32>,
    ) -> Result<Self, DataError> {
        let d = schema.len();
        assert_eq!(values.len(), n * d, "flat value buffer must be n x d");
        for r in 0..n {
            for c in 0..d {
                let v = values[r * d + c];
                if v as usize >= schema[c].cardinality {
                    return Err(DataError::CellOutOfRange {
                        row: r,
                        col: c,
                        value: v,
                        cardinality: schema[c].cardinality,
                    });
                }
            }
        }
        Ok(Self { schema, n, values })
    }

    pub fn empty(schema: Vec<VariableMeta>) -> Self {
        Self { schema, n: 0, values: Vec::new() }
    }

    pub fn schema(&self) -> &[VariableMeta] {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn width(&self) -> usize {
        self.schema.len()
    }

    pub fn cardinality(&self, col: usize) -> usize {
        self.schema[col].cardinality
    }

    pub fn value(&self, row: usize, col: usize) -> u32 {
        self.values[row * self.width() + col]
    }

    pub fn row(&self, row: usize) -> &[u32] {
        let d = self.width();
        &self.values[row * d..(row + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.values.chunks_exact(self.width().max(1)).take(self.n)
    }

    /// Concatenates datasets sharing one schema, preserving client order.
    pub fn concat(parts: &[&DiscreteDataset]) -> Result<Self, DataError> {
        let first = parts.first().ok_or(DataError::SchemaMismatch)?;
        let mut values = Vec::new();
        let mut n = 0;
        for p in parts {
            if p.schema != first.schema {
                return Err(DataError::SchemaMismatch);
            }
            values.extend_from_slice(&p.values);
            n += p.n;
        }
        Ok(Self { schema: first.schema.clone(), n, values })
    }
}

/// Schema plus row count, for JSON audit output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub schema: Vec<VariableMeta>,
    pub rows: usize,
}

impl From<&DiscreteDataset> for DatasetMeta {
    fn from(d: &DiscreteDataset) -> Self {
        Self { schema: d.schema.clone(), rows: d.len() }
    }
}

/// An ordered list of client datasets sharing one schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientPartition {
    clients: Vec<DiscreteDataset>,
}

impl ClientPartition {
    pub fn new(clients: Vec<DiscreteDataset>) -> Result<Self, DataError> {
        let first = clients.first().ok_or(DataError::SchemaMismatch)?;
        if clients.iter().any(|c| c.schema() != first.schema()) {
            return Err(DataError::SchemaMismatch);
        }
        Ok(Self { clients })
    }

    pub fn clients(&self) -> &[DiscreteDataset] {
        &self.clients
    }

    pub fn client_count(&self) -> usize {
        self.clients.len()
    }

    pub fn schema(&self) -> &[VariableMeta] {
        self.clients[0].schema()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.clients.iter().map(|c| c.len()).collect()
    }

    pub fn empty_clients(&self) -> Vec<usize> {
        (0..self.clients.len()).filter(|&i| self.clients[i].is_empty()).collect()
    }

    pub fn pooled(&self) -> DiscreteDataset {
        let refs: Vec<&DiscreteDataset> = self.clients.iter().collect();
        DiscreteDataset::concat(&refs).expect("clients share a schema")
    }

    pub fn meta(&self) -> PartitionMeta {
        PartitionMeta {
            schema: self.schema().to_vec(),
            client_sizes: self.sizes(),
            empty_clients: self.empty_clients(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionMeta {
    pub schema: Vec<VariableMeta>,
    pub client_sizes: Vec<usize>,
    pub empty_clients: Vec<usize>,
}

/// Conditional probability table for one variable given its parents.
/// Row `r` is the distribution for the parent configuration with mixed-radix
/// index `r` (first parent most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct Cpd {
    pub variable: usize,
    pub parents: Vec<usize>,
    parent_cards: Vec<usize>,
    cardinality: usize,
    table: Vec<f64>,
}

impl Cpd {
    pub fn new(
        variable: usize,
        parents: Vec<usize>,
        parent_cards: Vec<usize>,
        cardinality: usize,
        table: Vec<f64>,
    ) -> Result<Self, DataError> {
        let rows: usize = parent_cards.iter().product();
        if parents.len() != parent_cards.len() || table.len() != rows * cardinality {
            return Err(DataError::CpdShape {
                variable,
                detail: format!(
                    "{} parents, {} cells for {} rows x {} categories",
                    parents.len(),
                    table.len(),
                    rows,
                    cardinality
                ),
            });
        }
        for r in 0..rows {
            let row = &table[r * cardinality..(r + 1) * cardinality];
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(DataError::UnnormalisedRow { row: r, sum });
            }
        }
        Ok(Self { variable, parents, parent_cards, cardinality, table })
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn row_count(&self) -> usize {
        self.parent_cards.iter().product()
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.table[index * self.cardinality..(index + 1) * self.cardinality]
    }

    pub fn row_index_for(&self, assignment: &[u32]) -> usize {
        let mut idx = 0usize;
        for (k, &p) in self.parents.iter().enumerate() {
            idx = idx * self.parent_cards[k] + assignment[p] as usize;
        }
        idx
    }
}

fn sample_simplex_row(rng: &mut ChaCha20Rng, gamma: &Gamma<f64>, len: usize, out: &mut Vec<f64>) {
    let start = out.len();
    let mut sum = 0.0;
    for _ in 0..len {
        let g: f64 = gamma.sample(rng);
        sum += g;
        out.push(g);
    }
    if sum <= 0.0 {
        // Underflow for tiny concentrations; fall back to uniform.
        for v in &mut out[start..] {
            *v = 1.0 / len as f64;
        }
    } else {
        for v in &mut out[start..] {
            *v /= sum;
        }
    }
}

/// Samples one CPT row per parent configuration from a symmetric
/// Dirichlet(`alpha`). Deterministic given `seed`.
pub fn sample_cpds(
    g: &CausalDag,
    schema: &[VariableMeta],
    alpha: f64,
    seed: u64,
) -> Result<Vec<Cpd>, DataError> {
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(DataError::NonPositiveAlpha(alpha));
    }
    assert_eq!(schema.len(), g.node_count(), "schema length must match node count");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let gamma = Gamma::new(alpha, 1.0).expect("positive alpha");
    let mut cpds = Vec::with_capacity(schema.len());
    for v in 0..schema.len() {
        let parents = g.parents(v);
        let parent_cards: Vec<usize> = parents.iter().map(|&p| schema[p].cardinality).collect();
        let rows: usize = parent_cards.iter().product();
        let card = schema[v].cardinality;
        let mut table = Vec::with_capacity(rows * card);
        for _ in 0..rows {
            sample_simplex_row(&mut rng, &gamma, card, &mut table);
        }
        cpds.push(Cpd::new(v, parents, parent_cards, card, table)?);
    }
    Ok(cpds)
}

fn sample_category(row: &[f64], u: f64) -> u32 {
    let mut acc = 0.0;
    for (i, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i as u32;
        }
    }
    (row.len() - 1) as u32
}

/// Draws `n` i.i.d. rows by sampling each variable in topological order from
/// its CPT row.
pub fn forward_sample(
    g: &CausalDag,
    schema: &[VariableMeta],
    cpds: &[Cpd],
    n: usize,
    seed: u64,
) -> Result<DiscreteDataset, DataError> {
    let d = g.node_count();
    assert_eq!(schema.len(), d, "schema length must match node count");
    let mut by_var: Vec<Option<&Cpd>> = vec![None; d];
    for c in cpds {
        if c.variable < d {
            by_var[c.variable] = Some(c);
        }
    }
    for v in 0..d {
        let c = by_var[v].ok_or(DataError::MissingCpd(v))?;
        if c.cardinality() != schema[v].cardinality {
            return Err(DataError::CpdShape { variable: v, detail: "cardinality mismatch".into() });
        }
    }
    let order = g.topological_order().ok_or(GraphError::DirectedCycle)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut values = vec![0u32; n * d];
    let mut assignment = vec![0u32; d];
    for r in 0..n {
        for &v in &order {
            let cpd = by_var[v].expect("checked above");
            let row = cpd.row(cpd.row_index_for(&assignment));
            assignment[v] = sample_category(row, rng.random::<f64>());
        }
        values[r * d..(r + 1) * d].copy_from_slice(&assignment);
    }
    DiscreteDataset::from_flat(schema.to_vec(), n, values)
}

/// Shuffles rows and deals them into `k` near-equal clients (sizes differ by
/// at most one). The pooled rows are a permutation of the input rows.
pub fn partition_iid(
    data: &DiscreteDataset,
    k: usize,
    seed: u64,
) -> Result<ClientPartition, DataError> {
    let n = data.len();
    if k == 0 || k > n {
        return Err(DataError::BadPartition { n, k });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut index: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        index.swap(i, j);
    }
    let base = n / k;
    let remainder = n % k;
    let mut clients = Vec::with_capacity(k);
    let mut cursor = 0usize;
    for c in 0..k {
        let size = base + usize::from(c < remainder);
        let rows: Vec<Vec<u32>> =
            index[cursor..cursor + size].iter().map(|&r| data.row(r).to_vec()).collect();
        cursor += size;
        clients.push(DiscreteDataset::new(data.schema().to_vec(), rows)?);
    }
    ClientPartition::new(clients)
}

/// Surrogate routing variable: a child of `parents` with one category per
/// client. Row `r` of `table` is the client distribution for the parent
/// configuration with mixed-radix index `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeterogeneitySpec {
    pub parents: Vec<usize>,
    parent_cards: Vec<usize>,
    client_count: usize,
    table: Vec<f64>,
}

impl HeterogeneitySpec {
    pub fn new(
        schema: &[VariableMeta],
        parents: Vec<usize>,
        client_count: usize,
        table: Vec<f64>,
    ) -> Result<Self, DataError> {
        let parent_cards: Vec<usize> = parents.iter().map(|&p| schema[p].cardinality).collect();
        let rows: usize = parent_cards.iter().product();
        if table.len() != rows * client_count {
            return Err(DataError::SurrogateCardinality {
                got: table.len().checked_div(rows).unwrap_or(0),
                clients: client_count,
            });
        }
        for r in 0..rows {
            let row = &table[r * client_count..(r + 1) * client_count];
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(DataError::UnnormalisedRow { row: r, sum });
            }
        }
        Ok(Self { parents, parent_cards, client_count, table })
    }

    /// Softmax-sharp routing on the joint parent value: configuration `r`
    /// prefers client `r mod k` with weight `exp(sharpness)` against weight 1
    /// for every other client. `sharpness = 0` routes uniformly.
    pub fn sharp_routing(
        schema: &[VariableMeta],
        parents: Vec<usize>,
        client_count: usize,
        sharpness: f64,
    ) -> Result<Self, DataError> {
        let parent_cards: Vec<usize> = parents.iter().map(|&p| schema[p].cardinality).collect();
        let rows: usize = parent_cards.iter().product();
        let mut table = Vec::with_capacity(rows * client_count);
        for r in 0..rows {
            let favored = r % client_count;
            let hot = sharpness.exp();
            let z = hot + (client_count - 1) as f64;
            for c in 0..client_count {
                table.push(if c == favored { hot / z } else { 1.0 / z });
            }
        }
        Self::new(schema, parents, client_count, table)
    }

    pub fn client_count(&self) -> usize {
        self.client_count
    }

    fn route_row(&self, row: &[u32], u: f64) -> usize {
        let mut idx = 0usize;
        for (k, &p) in self.parents.iter().enumerate() {
            idx = idx * self.parent_cards[k] + row[p] as usize;
        }
        let dist = &self.table[idx * self.client_count..(idx + 1) * self.client_count];
        sample_category(dist, u) as usize
    }
}

/// Samples `n` rows from `g`, routes each to the client drawn from the
/// surrogate's CPT row, and drops the surrogate column. Clients may end up
/// empty; they are kept and reported through [`ClientPartition::meta`].
pub fn partition_heterogeneous(
    g: &CausalDag,
    schema: &[VariableMeta],
    cpds: &[Cpd],
    spec: &HeterogeneitySpec,
    n: usize,
    seed: u64,
) -> Result<ClientPartition, DataError> {
    let data = forward_sample(g, schema, cpds, n, seed)?;
    let mut rng = ChaCha20Rng::seed_from_u64(crate::seeding::derive_u64(seed, "surrogate", &[]));
    let mut rows_per_client: Vec<Vec<Vec<u32>>> = vec![Vec::new(); spec.client_count()];
    for r in 0..data.len() {
        let row = data.row(r);
        let client = spec.route_row(row, rng.random::<f64>());
        rows_per_client[client].push(row.to_vec());
    }
    let clients = rows_per_client
        .into_iter()
        .map(|rows| DiscreteDataset::new(schema.to_vec(), rows))
        .collect::<Result<Vec<_>, _>>()?;
    ClientPartition::new(clients)
}
