//! Grid execution, scoring, and result emission.

use super::{sachs, Algorithm, ExperimentConfig, GraphSource, HarnessError, HeterogeneityConfig};
use crate::data::{
    forward_sample, load_csv, partition_heterogeneous, partition_iid, sample_cpds,
    ClientPartition, Cpd, DiscreteDataset, HeterogeneitySpec,
};
use crate::fedci::FedCiParams;
use crate::graph::format::{GraphFile, GraphKind};
use crate::graph::{
    dag_to_cpdag, dag_to_mag, default_schema, er_prob_for_expected_degree, mag_to_pag,
    random_er_dag, shd, CausalDag, Pattern, ShdReport, VariableMeta,
};
use crate::learner::{
    fci_centralized, fci_cit_voting, fci_voting, fedfci, fedpc, pc_centralized, pc_cit_voting,
    pc_voting, LearnRun, LearnerConfig,
};
use crate::seeding::derive_u64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

/// Outcome of one `(algorithm, client count, seed)` cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub algorithm: String,
    pub clients: usize,
    pub seed: u64,
    pub shd: ShdReport,
    pub ci_queries: usize,
    pub degenerate_queries: usize,
    pub low_expected_queries: usize,
    pub dropped_clients: Vec<usize>,
    /// Hash of the partition rows; equal values certify identical inputs.
    pub partition_fingerprint: String,
    /// Wall-clock learning time. Excluded from the deterministic result
    /// files; see [`emit_results`].
    pub duration_secs: f64,
}

/// Per `(algorithm, client count)` aggregate over seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub clients: usize,
    pub runs: usize,
    pub shd_mean: f64,
    pub shd_std: f64,
    pub ci_queries_mean: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub name: String,
    pub runs: Vec<RunResult>,
    pub summary: Vec<SummaryRow>,
}

struct SynthMaterials {
    dag: CausalDag,
    full_schema: Vec<VariableMeta>,
    cpds: Vec<Cpd>,
    latents: Vec<usize>,
}

struct SeedMaterials {
    seed: u64,
    observed_data: DiscreteDataset,
    synth: Option<SynthMaterials>,
    truth_cpdag: Option<Pattern>,
    truth_pag: Option<Pattern>,
}

fn project_columns(
    data: &DiscreteDataset,
    schema: &[VariableMeta],
    keep: &[usize],
) -> Result<DiscreteDataset, HarnessError> {
    let kept_schema: Vec<VariableMeta> = keep.iter().map(|&c| schema[c].clone()).collect();
    let rows: Vec<Vec<u32>> = (0..data.len())
        .map(|r| keep.iter().map(|&c| data.value(r, c)).collect())
        .collect();
    Ok(DiscreteDataset::new(kept_schema, rows)?)
}

fn prepare_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedMaterials, HarnessError> {
    match &cfg.graph {
        GraphSource::Synthetic {
            nodes,
            expected_degree,
            cardinality,
            dirichlet_alpha,
            latents,
        } => {
            let p = er_prob_for_expected_degree(*nodes, *expected_degree);
            let dag = random_er_dag(*nodes, p, derive_u64(seed, "graph", &[]))?;
            let full_schema = default_schema(*nodes, *cardinality);
            let cpds = sample_cpds(&dag, &full_schema, *dirichlet_alpha, derive_u64(seed, "cpds", &[]))?;

            let latent_set: Vec<usize> = if *latents == 0 {
                Vec::new()
            } else {
                let mut rng = ChaCha20Rng::seed_from_u64(derive_u64(seed, "latents", &[]));
                let mut nodes_vec: Vec<usize> = (0..*nodes).collect();
                for i in (1..nodes_vec.len()).rev() {
                    let j = rng.random_range(0..=i);
                    nodes_vec.swap(i, j);
                }
                let mut chosen = nodes_vec[..*latents].to_vec();
                chosen.sort_unstable();
                chosen
            };
            let observed: Vec<usize> =
                (0..*nodes).filter(|v| !latent_set.contains(v)).collect();

            let full_data =
                forward_sample(&dag, &full_schema, &cpds, cfg.samples, derive_u64(seed, "data", &[]))?;
            let observed_data = project_columns(&full_data, &full_schema, &observed)?;

            let truth_cpdag = latent_set.is_empty().then(|| dag_to_cpdag(&dag));
            let truth_pag = Some(mag_to_pag(&dag_to_mag(&dag, &latent_set)?));

            Ok(SeedMaterials {
                seed,
                observed_data,
                synth: Some(SynthMaterials { dag, full_schema, cpds, latents: latent_set }),
                truth_cpdag,
                truth_pag,
            })
        }
        GraphSource::Dataset { data, truth } => {
            let (dataset, csv_schema) = load_csv(data, None)?;
            let columns: Vec<String> =
                csv_schema.columns.iter().map(|c| c.name.clone()).collect();
            let truth_text = std::fs::read_to_string(truth)?;
            let truth_file = GraphFile::parse(&truth_text)?;
            let truth_file = sachs::align_to_columns(&truth_file, &columns)?;
            let (truth_cpdag, truth_pag) = truths_from_file(&truth_file)?;
            Ok(SeedMaterials {
                seed,
                observed_data: dataset,
                synth: None,
                truth_cpdag,
                truth_pag,
            })
        }
    }
}

/// Ground-truth patterns derivable from a graph file: a DAG yields both its
/// CPDAG and (through marginalisation with no latents) its PAG; pattern
/// files yield themselves.
fn truths_from_file(
    gf: &GraphFile,
) -> Result<(Option<Pattern>, Option<Pattern>), HarnessError> {
    match gf.kind {
        Some(GraphKind::Dag) | None => {
            let dag = gf.to_dag()?;
            let cpdag = dag_to_cpdag(&dag);
            let pag = mag_to_pag(&dag_to_mag(&dag, &[])?);
            Ok((Some(cpdag), Some(pag)))
        }
        Some(GraphKind::Mag) => Ok((None, Some(mag_to_pag(&gf.to_mag()?)))),
        Some(GraphKind::Cpdag) => {
            Ok((Some(gf.to_pattern(crate::graph::PatternKind::Cpdag)?), None))
        }
        Some(GraphKind::Pag) => Ok((None, Some(gf.to_pattern(crate::graph::PatternKind::Pag)?))),
    }
}

fn heterogeneity_spec(
    het: &HeterogeneityConfig,
    schema: &[VariableMeta],
    k: usize,
) -> Result<HeterogeneitySpec, HarnessError> {
    for &p in &het.parents {
        if p >= schema.len() {
            return Err(HarnessError::Config(format!(
                "heterogeneity parent {p} out of range for {} columns",
                schema.len()
            )));
        }
    }
    Ok(HeterogeneitySpec::sharp_routing(schema, het.parents.clone(), k, het.sharpness)?)
}

fn build_partition(
    cfg: &ExperimentConfig,
    materials: &SeedMaterials,
    k: usize,
) -> Result<ClientPartition, HarnessError> {
    match (&cfg.heterogeneity, &materials.synth) {
        (Some(het), Some(synth)) => {
            let spec = heterogeneity_spec(het, &synth.full_schema, k)?;
            if !synth.latents.is_empty() {
                return Err(HarnessError::Config(
                    "heterogeneity and latents cannot be combined".into(),
                ));
            }
            Ok(partition_heterogeneous(
                &synth.dag,
                &synth.full_schema,
                &synth.cpds,
                &spec,
                cfg.samples,
                derive_u64(materials.seed, "data", &[]),
            )?)
        }
        (Some(_), None) => Err(HarnessError::Config(
            "heterogeneity requires a synthetic graph source".into(),
        )),
        (None, _) => Ok(partition_iid(
            &materials.observed_data,
            k,
            derive_u64(materials.seed, "partition", &[k as u64]),
        )?),
    }
}

fn choose_dropouts(cfg: &ExperimentConfig, seed: u64, k: usize) -> Vec<usize> {
    let Some(fraction) = cfg.dropout_fraction else {
        return Vec::new();
    };
    if fraction <= 0.0 {
        return Vec::new();
    }
    let count = (fraction * k as f64).ceil() as usize;
    let mut ids: Vec<usize> = (0..k).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(derive_u64(seed, "dropout", &[k as u64]));
    for i in (1..ids.len()).rev() {
        let j = rng.random_range(0..=i);
        ids.swap(i, j);
    }
    let mut chosen = ids[..count.min(k)].to_vec();
    chosen.sort_unstable();
    chosen
}

fn fingerprint(partition: &ClientPartition) -> String {
    let mut hasher = Sha256::new();
    for client in partition.clients() {
        hasher.update((client.len() as u64).to_le_bytes());
        for row in client.rows() {
            for &v in row {
                hasher.update(v.to_le_bytes());
            }
        }
    }
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn surviving_partition(
    partition: &ClientPartition,
    dropped: &[usize],
) -> Result<ClientPartition, HarnessError> {
    if dropped.is_empty() {
        return Ok(partition.clone());
    }
    let clients: Vec<DiscreteDataset> = partition
        .clients()
        .iter()
        .enumerate()
        .filter(|(i, _)| !dropped.contains(i))
        .map(|(_, c)| c.clone())
        .collect();
    Ok(ClientPartition::new(clients)?)
}

fn run_algorithm(
    algorithm: Algorithm,
    cfg: &ExperimentConfig,
    partition: &ClientPartition,
    dropped: &[usize],
    cell_seed: u64,
) -> Result<LearnRun, HarnessError> {
    let d = partition.schema().len();
    let lcfg = LearnerConfig {
        max_cond: cfg.max_cond.or(LearnerConfig::for_nodes(d).max_cond),
        pdsep_prune: true,
    };
    let params = FedCiParams::new(cfg.alpha, cfg.encoding_size, cfg.mode, cell_seed);
    let run = match algorithm {
        Algorithm::Pc => pc_centralized(&partition.pooled(), cfg.alpha, &lcfg)?,
        Algorithm::Fci => fci_centralized(&partition.pooled(), cfg.alpha, &lcfg)?,
        Algorithm::FedPc => fedpc(partition, &params, &lcfg, dropped)?,
        Algorithm::FedFci => fedfci(partition, &params, &lcfg, dropped)?,
        Algorithm::PcVoting => {
            pc_voting(&surviving_partition(partition, dropped)?, cfg.alpha, &lcfg)?
        }
        Algorithm::PcCitVoting => {
            pc_cit_voting(&surviving_partition(partition, dropped)?, cfg.alpha, &lcfg)?
        }
        Algorithm::FciVoting => {
            fci_voting(&surviving_partition(partition, dropped)?, cfg.alpha, &lcfg)?
        }
        Algorithm::FciCitVoting => {
            fci_cit_voting(&surviving_partition(partition, dropped)?, cfg.alpha, &lcfg)?
        }
    };
    Ok(run)
}

fn run_cell(
    cfg: &ExperimentConfig,
    algorithms: &[Algorithm],
    materials: &SeedMaterials,
    k: usize,
) -> Result<Vec<RunResult>, HarnessError> {
    let partition = build_partition(cfg, materials, k)?;
    let dropped = choose_dropouts(cfg, materials.seed, k);
    let print = fingerprint(&partition);
    let cell_seed = derive_u64(materials.seed, "fedci", &[k as u64]);

    let mut results = Vec::with_capacity(algorithms.len());
    for &algorithm in algorithms {
        let truth = if algorithm.is_fci_family() {
            materials.truth_pag.as_ref().ok_or_else(|| {
                HarnessError::Config(format!("no PAG ground truth available for {algorithm}"))
            })?
        } else {
            materials.truth_cpdag.as_ref().ok_or_else(|| {
                HarnessError::Config(format!("no CPDAG ground truth available for {algorithm}"))
            })?
        };
        let start = Instant::now();
        let run = run_algorithm(algorithm, cfg, &partition, &dropped, cell_seed)?;
        let duration_secs = start.elapsed().as_secs_f64();
        let report = shd(&run.pattern, truth)?;
        let degenerate = run.manifest.queries.iter().filter(|q| q.degenerate).count();
        let low_expected =
            run.manifest.queries.iter().filter(|q| q.low_expected_count).count();
        results.push(RunResult {
            algorithm: algorithm.id().to_string(),
            clients: k,
            seed: materials.seed,
            shd: report,
            ci_queries: run.manifest.ci_queries,
            degenerate_queries: degenerate,
            low_expected_queries: low_expected,
            dropped_clients: dropped.clone(),
            partition_fingerprint: print.clone(),
            duration_secs,
        });
    }
    Ok(results)
}

fn summarize(cfg: &ExperimentConfig, runs: &[RunResult]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for algorithm in &cfg.algorithms {
        for &k in &cfg.clients {
            let cell: Vec<&RunResult> = runs
                .iter()
                .filter(|r| &r.algorithm == algorithm && r.clients == k)
                .collect();
            if cell.is_empty() {
                continue;
            }
            let n = cell.len() as f64;
            let shd_mean = cell.iter().map(|r| r.shd.shd as f64).sum::<f64>() / n;
            let var = if cell.len() > 1 {
                cell.iter().map(|r| (r.shd.shd as f64 - shd_mean).powi(2)).sum::<f64>()
                    / (n - 1.0)
            } else {
                0.0
            };
            rows.push(SummaryRow {
                algorithm: algorithm.clone(),
                clients: k,
                runs: cell.len(),
                shd_mean,
                shd_std: var.sqrt(),
                ci_queries_mean: cell.iter().map(|r| r.ci_queries as f64).sum::<f64>() / n,
            });
        }
    }
    rows
}

/// Runs every `(seed, client count, algorithm)` cell of the grid. All
/// algorithms within a cell share one partition, one dropout set, and one
/// federated seed; cells run in parallel up to `workers`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    cfg.validate()?;
    let algorithms = cfg.algorithms()?;
    if let Some(f) = cfg.dropout_fraction {
        for &k in &cfg.clients {
            if (f * k as f64).ceil() as usize >= k && f > 0.0 {
                return Err(HarnessError::Config(format!(
                    "dropout fraction {f} would drop every one of {k} clients"
                )));
            }
        }
    }
    let seeds = cfg.effective_seeds();
    let materials: Vec<SeedMaterials> =
        seeds.iter().map(|&s| prepare_seed(cfg, s)).collect::<Result<_, _>>()?;

    let cells: Vec<(usize, usize)> = (0..materials.len())
        .flat_map(|si| cfg.clients.iter().map(move |&k| (si, k)))
        .collect();

    let execute = || -> Result<Vec<Vec<RunResult>>, HarnessError> {
        cells
            .par_iter()
            .map(|&(si, k)| run_cell(cfg, &algorithms, &materials[si], k))
            .collect()
    };
    let nested = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?
            .install(execute),
        None => execute(),
    }?;

    let mut runs: Vec<RunResult> = nested.into_iter().flatten().collect();
    let algorithm_rank = |name: &str| {
        cfg.algorithms.iter().position(|a| a == name).unwrap_or(usize::MAX)
    };
    let seed_rank =
        |seed: u64| seeds.iter().position(|&s| s == seed).unwrap_or(usize::MAX);
    runs.sort_by_key(|r| (algorithm_rank(&r.algorithm), r.clients, seed_rank(r.seed)));

    let summary = summarize(cfg, &runs);
    Ok(ExperimentOutput { name: cfg.name.clone(), runs, summary })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DropoutDelta {
    pub algorithm: String,
    pub clients: usize,
    pub baseline_shd_mean: f64,
    pub dropout_shd_mean: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DropoutComparison {
    pub fraction: f64,
    pub baseline: ExperimentOutput,
    pub with_dropout: ExperimentOutput,
    pub deltas: Vec<DropoutDelta>,
}

/// Runs the grid twice, without and with the dropout script, on identical
/// seeds and partitions, and reports the per-cell SHD deltas.
pub fn dropout_experiment(
    cfg: &ExperimentConfig,
    fraction: f64,
) -> Result<DropoutComparison, HarnessError> {
    let mut baseline_cfg = cfg.clone();
    baseline_cfg.dropout_fraction = None;
    let mut dropout_cfg = cfg.clone();
    dropout_cfg.dropout_fraction = Some(fraction);

    let baseline = run_experiment(&baseline_cfg)?;
    let with_dropout = run_experiment(&dropout_cfg)?;
    let deltas = baseline
        .summary
        .iter()
        .filter_map(|b| {
            with_dropout
                .summary
                .iter()
                .find(|d| d.algorithm == b.algorithm && d.clients == b.clients)
                .map(|d| DropoutDelta {
                    algorithm: b.algorithm.clone(),
                    clients: b.clients,
                    baseline_shd_mean: b.shd_mean,
                    dropout_shd_mean: d.shd_mean,
                    delta: d.shd_mean - b.shd_mean,
                })
        })
        .collect();
    Ok(DropoutComparison { fraction, baseline, with_dropout, deltas })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmitFormat {
    Json,
    Csv,
}

impl FromStr for EmitFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(EmitFormat::Json),
            "csv" => Ok(EmitFormat::Csv),
            other => Err(format!("unknown format {other:?} (expected json|csv)")),
        }
    }
}

#[derive(Serialize)]
struct DeterministicRun<'a> {
    algorithm: &'a str,
    clients: usize,
    seed: u64,
    shd: usize,
    missing: usize,
    extra: usize,
    mark_mismatch: usize,
    ci_queries: usize,
    degenerate_queries: usize,
    low_expected_queries: usize,
    dropped_clients: &'a [usize],
    partition_fingerprint: &'a str,
}

#[derive(Serialize)]
struct TimingRun<'a> {
    algorithm: &'a str,
    clients: usize,
    seed: u64,
    duration_secs: f64,
}

/// Writes one row per run plus a summary file. The deterministic files
/// (`runs`, `summary`) are a pure function of the config; wall-clock timings
/// go to a separate `timings` file.
pub fn emit_results(
    output: &ExperimentOutput,
    format: EmitFormat,
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>, HarnessError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let runs: Vec<DeterministicRun> = output
        .runs
        .iter()
        .map(|r| DeterministicRun {
            algorithm: &r.algorithm,
            clients: r.clients,
            seed: r.seed,
            shd: r.shd.shd,
            missing: r.shd.missing,
            extra: r.shd.extra,
            mark_mismatch: r.shd.mark_mismatch,
            ci_queries: r.ci_queries,
            degenerate_queries: r.degenerate_queries,
            low_expected_queries: r.low_expected_queries,
            dropped_clients: &r.dropped_clients,
            partition_fingerprint: &r.partition_fingerprint,
        })
        .collect();
    let timings: Vec<TimingRun> = output
        .runs
        .iter()
        .map(|r| TimingRun {
            algorithm: &r.algorithm,
            clients: r.clients,
            seed: r.seed,
            duration_secs: r.duration_secs,
        })
        .collect();

    let mut written = Vec::new();
    match format {
        EmitFormat::Json => {
            let paths = [
                (dir.join("runs.json"), serde_json::to_string_pretty(&runs)?),
                (dir.join("summary.json"), serde_json::to_string_pretty(&output.summary)?),
                (dir.join("timings.json"), serde_json::to_string_pretty(&timings)?),
            ];
            for (path, text) in paths {
                std::fs::write(&path, text + "\n")?;
                written.push(path);
            }
        }
        EmitFormat::Csv => {
            let runs_path = dir.join("runs.csv");
            let mut w = csv::Writer::from_path(&runs_path)?;
            w.write_record([
                "algorithm",
                "clients",
                "seed",
                "shd",
                "missing",
                "extra",
                "mark_mismatch",
                "ci_queries",
                "degenerate_queries",
                "low_expected_queries",
                "dropped_clients",
                "partition_fingerprint",
            ])?;
            for r in &runs {
                let dropped = r
                    .dropped_clients
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join("|");
                w.write_record([
                    r.algorithm.to_string(),
                    r.clients.to_string(),
                    r.seed.to_string(),
                    r.shd.to_string(),
                    r.missing.to_string(),
                    r.extra.to_string(),
                    r.mark_mismatch.to_string(),
                    r.ci_queries.to_string(),
                    r.degenerate_queries.to_string(),
                    r.low_expected_queries.to_string(),
                    dropped,
                    r.partition_fingerprint.to_string(),
                ])?;
            }
            w.flush()?;
            written.push(runs_path);

            let summary_path = dir.join("summary.csv");
            let mut w = csv::Writer::from_path(&summary_path)?;
            w.write_record(["algorithm", "clients", "runs", "shd_mean", "shd_std", "ci_queries_mean"])?;
            for s in &output.summary {
                w.write_record([
                    s.algorithm.clone(),
                    s.clients.to_string(),
                    s.runs.to_string(),
                    format!("{:.6}", s.shd_mean),
                    format!("{:.6}", s.shd_std),
                    format!("{:.6}", s.ci_queries_mean),
                ])?;
            }
            w.flush()?;
            written.push(summary_path);

            let timings_path = dir.join("timings.csv");
            let mut w = csv::Writer::from_path(&timings_path)?;
            w.write_record(["algorithm", "clients", "seed", "duration_secs"])?;
            for t in &timings {
                w.write_record([
                    t.algorithm.to_string(),
                    t.clients.to_string(),
                    t.seed.to_string(),
                    format!("{:.6}", t.duration_secs),
                ])?;
            }
            w.flush()?;
            written.push(timings_path);
        }
    }
    Ok(written)
}
