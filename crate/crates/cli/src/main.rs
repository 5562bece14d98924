//! `fedcausal` command-line tool: synthesize benchmark data, run federated
//! conditional-independence tests and structure learners, score learned
//! graphs, and execute experiment grids.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error.

use clap::{Args, Parser, Subcommand};
use fedcausal::data::{
    load_csv, numeric_csv_schema, partition_iid, write_csv, ClientPartition,
};
use fedcausal::fedci::{fed_ci_test, CiMode, CiQuery, FedCiParams};
use fedcausal::graph::format::{GraphFile, GraphKind};
use fedcausal::graph::{
    dag_to_cpdag, dag_to_mag, default_schema, er_prob_for_expected_degree, mag_to_pag,
    random_er_dag, shd, Pattern, PatternKind,
};
use fedcausal::harness::{
    dropout_experiment, emit_results, run_experiment, sachs, Algorithm, EmitFormat,
    ExperimentConfig,
};
use fedcausal::learner::{
    fci_centralized, fci_cit_voting, fci_voting, fedfci, fedpc, pc_centralized, pc_cit_voting,
    pc_voting, LearnRun, LearnerConfig,
};
use fedcausal::secureagg::Aggregator;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(name = "fedcausal", version, about = "Federated constraint-based causal structure learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random DAG, Dirichlet CPTs, and forward-sampled data.
    Synth(SynthArgs),
    /// Run one conditional-independence test over a client partition.
    CiTest(CiTestArgs),
    /// Learn a causal pattern from a CSV dataset.
    Learn(LearnArgs),
    /// Structural Hamming distance between a learned and a truth graph.
    Score(ScoreArgs),
    /// Run an experiment grid from a JSON or TOML config.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 10)]
    nodes: usize,
    #[arg(long, default_value_t = 2.0)]
    expected_degree: f64,
    #[arg(long, default_value_t = 2)]
    cardinality: usize,
    #[arg(long, default_value_t = 1.0)]
    dirichlet_alpha: f64,
    #[arg(long, default_value_t = 5000)]
    samples: usize,
    /// Mask this many randomly chosen variables from the emitted data.
    #[arg(long, default_value_t = 0)]
    latents: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV for the (observed) data.
    #[arg(long)]
    data_out: PathBuf,
    /// Output graph file for the generating DAG.
    #[arg(long)]
    dag_out: PathBuf,
    /// Optional output for the marginalised PAG ground truth.
    #[arg(long)]
    pag_out: Option<PathBuf>,
}

#[derive(Args)]
struct CiTestArgs {
    #[arg(long)]
    data: PathBuf,
    /// Column name or index.
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    /// Comma-separated conditioning columns.
    #[arg(long, default_value = "")]
    cond: String,
    #[arg(long, default_value_t = 1)]
    clients: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 50)]
    encoding_size: usize,
    #[arg(long, default_value = "sketched")]
    mode: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct LearnArgs {
    #[arg(long)]
    data: PathBuf,
    /// pc | fci | fedpc | fedfci | pc-voting | pc-cit-voting | fci-voting | fci-cit-voting
    #[arg(long)]
    algorithm: String,
    #[arg(long, default_value_t = 1)]
    clients: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 50)]
    encoding_size: usize,
    #[arg(long, default_value = "sketched")]
    mode: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_cond: Option<usize>,
    /// Output path for the learned pattern (graph file format).
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON audit manifest of every CI query and separator.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    learned: PathBuf,
    /// Truth graph file; a DAG or MAG is converted to the learned kind's
    /// equivalence-class pattern first. Pass `sachs` for the bundled
    /// consensus network.
    #[arg(long)]
    truth: String,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    #[arg(long, default_value = "json")]
    format: String,
    /// Run the dropout comparison at this fraction instead of a single grid.
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn config(err: impl std::fmt::Display) -> Self {
        CliError::Config(err.to_string())
    }
    fn runtime(err: impl std::fmt::Display) -> Self {
        CliError::Runtime(err.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(args) => synth(args),
        Command::CiTest(args) => ci_test(args),
        Command::Learn(args) => learn(args),
        Command::Score(args) => score(args),
        Command::Experiment(args) => experiment(args),
    }
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    if args.latents >= args.nodes {
        return Err(CliError::Config("latents must leave observed nodes".into()));
    }
    let p = er_prob_for_expected_degree(args.nodes, args.expected_degree);
    let dag = random_er_dag(args.nodes, p, args.seed).map_err(CliError::config)?;
    let schema = default_schema(args.nodes, args.cardinality);
    let cpds = fedcausal::data::sample_cpds(&dag, &schema, args.dirichlet_alpha, args.seed ^ 0xc0de)
        .map_err(CliError::config)?;
    let data = fedcausal::data::forward_sample(&dag, &schema, &cpds, args.samples, args.seed ^ 0xda7a)
        .map_err(CliError::runtime)?;

    let mut latent_set: Vec<usize> = Vec::new();
    if args.latents > 0 {
        // Deterministic choice: evenly spaced over the node range.
        latent_set = (0..args.latents).map(|i| i * args.nodes / args.latents).collect();
        latent_set.dedup();
    }
    let observed: Vec<usize> =
        (0..args.nodes).filter(|v| !latent_set.contains(v)).collect();
    let observed_schema: Vec<_> = observed.iter().map(|&c| schema[c].clone()).collect();
    let rows: Vec<Vec<u32>> = (0..data.len())
        .map(|r| observed.iter().map(|&c| data.value(r, c)).collect())
        .collect();
    let observed_data = fedcausal::data::DiscreteDataset::new(observed_schema.clone(), rows)
        .map_err(CliError::runtime)?;

    write_csv(&observed_data, &numeric_csv_schema(&observed_schema), &args.data_out)
        .map_err(CliError::runtime)?;
    let names: Vec<String> = schema.iter().map(|v| v.name.clone()).collect();
    std::fs::write(&args.dag_out, GraphFile::from_dag(&dag, &names).to_string())
        .map_err(CliError::runtime)?;
    if let Some(pag_out) = &args.pag_out {
        let mag = dag_to_mag(&dag, &latent_set).map_err(CliError::runtime)?;
        let pag = mag_to_pag(&mag);
        let observed_names: Vec<String> =
            observed.iter().map(|&c| schema[c].name.clone()).collect();
        std::fs::write(pag_out, GraphFile::from_pattern(&pag, &observed_names).to_string())
            .map_err(CliError::runtime)?;
    }
    eprintln!(
        "wrote {} rows x {} columns, DAG with {} edges",
        observed_data.len(),
        observed_data.width(),
        dag.edge_count()
    );
    Ok(())
}

fn resolve_column(token: &str, names: &[String]) -> Result<usize, CliError> {
    if let Ok(idx) = token.parse::<usize>() {
        if idx < names.len() {
            return Ok(idx);
        }
        return Err(CliError::Config(format!("column index {idx} out of range")));
    }
    names
        .iter()
        .position(|n| n == token)
        .ok_or_else(|| CliError::Config(format!("unknown column {token:?}")))
}

fn load_partition(
    path: &PathBuf,
    clients: usize,
    seed: u64,
) -> Result<(ClientPartition, Vec<String>), CliError> {
    let (data, csv_schema) = load_csv(path, None).map_err(CliError::config)?;
    let names: Vec<String> = csv_schema.columns.iter().map(|c| c.name.clone()).collect();
    let partition = partition_iid(&data, clients, seed).map_err(CliError::config)?;
    Ok((partition, names))
}

fn ci_test(args: CiTestArgs) -> Result<(), CliError> {
    let mode = CiMode::from_str(&args.mode).map_err(CliError::Config)?;
    let (partition, names) = load_partition(&args.data, args.clients, args.seed ^ 0x5117)?;
    let x = resolve_column(&args.x, &names)?;
    let y = resolve_column(&args.y, &names)?;
    let cond: Vec<usize> = args
        .cond
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| resolve_column(t.trim(), &names))
        .collect::<Result<_, _>>()?;
    let query = CiQuery::new(x, y, cond).map_err(CliError::config)?;
    let params = FedCiParams::new(args.alpha, args.encoding_size, mode, args.seed);
    let mut agg = Aggregator::new(args.seed ^ 0xa66);
    let decision =
        fed_ci_test(&partition, &query, &params, &mut agg).map_err(CliError::runtime)?;
    println!("{}", serde_json::to_string_pretty(&decision).map_err(CliError::runtime)?);
    Ok(())
}

fn learn(args: LearnArgs) -> Result<(), CliError> {
    let algorithm = Algorithm::from_str(&args.algorithm).map_err(CliError::Config)?;
    let mode = CiMode::from_str(&args.mode).map_err(CliError::Config)?;
    let (partition, names) = load_partition(&args.data, args.clients, args.seed ^ 0xbeef)?;
    let d = names.len();
    let cfg = LearnerConfig {
        max_cond: args.max_cond.or(LearnerConfig::for_nodes(d).max_cond),
        pdsep_prune: true,
    };
    let params = FedCiParams::new(args.alpha, args.encoding_size, mode, args.seed);
    let run: LearnRun = match algorithm {
        Algorithm::Pc => pc_centralized(&partition.pooled(), args.alpha, &cfg),
        Algorithm::Fci => fci_centralized(&partition.pooled(), args.alpha, &cfg),
        Algorithm::FedPc => fedpc(&partition, &params, &cfg, &[]),
        Algorithm::FedFci => fedfci(&partition, &params, &cfg, &[]),
        Algorithm::PcVoting => pc_voting(&partition, args.alpha, &cfg),
        Algorithm::PcCitVoting => pc_cit_voting(&partition, args.alpha, &cfg),
        Algorithm::FciVoting => fci_voting(&partition, args.alpha, &cfg),
        Algorithm::FciCitVoting => fci_cit_voting(&partition, args.alpha, &cfg),
    }
    .map_err(CliError::runtime)?;

    std::fs::write(&args.out, GraphFile::from_pattern(&run.pattern, &names).to_string())
        .map_err(CliError::runtime)?;
    if let Some(manifest_path) = &args.manifest {
        std::fs::write(
            manifest_path,
            serde_json::to_string_pretty(&run.manifest).map_err(CliError::runtime)?,
        )
        .map_err(CliError::runtime)?;
    }
    eprintln!(
        "{}: {} edges, {} CI queries",
        algorithm,
        run.pattern.edge_count(),
        run.manifest.ci_queries
    );
    Ok(())
}

fn score(args: ScoreArgs) -> Result<(), CliError> {
    let learned_text = std::fs::read_to_string(&args.learned).map_err(CliError::config)?;
    let learned_file = GraphFile::parse(&learned_text).map_err(CliError::config)?;
    let kind = learned_file.pattern_kind().ok_or_else(|| {
        CliError::Config("learned file must declare kind: cpdag or kind: pag".into())
    })?;
    let learned = learned_file.to_pattern(kind).map_err(CliError::config)?;

    let truth_file = if args.truth == "sachs" {
        sachs::consensus_graph_file()
    } else {
        let text = std::fs::read_to_string(&args.truth).map_err(CliError::config)?;
        GraphFile::parse(&text).map_err(CliError::config)?
    };
    let truth_file =
        sachs::align_to_columns(&truth_file, &learned_file.names).map_err(CliError::config)?;

    let truth: Pattern = match truth_file.kind {
        Some(GraphKind::Dag) | None => {
            let dag = truth_file.to_dag().map_err(CliError::config)?;
            match kind {
                PatternKind::Cpdag => dag_to_cpdag(&dag),
                PatternKind::Pag => {
                    mag_to_pag(&dag_to_mag(&dag, &[]).map_err(CliError::runtime)?)
                }
            }
        }
        Some(GraphKind::Mag) => mag_to_pag(&truth_file.to_mag().map_err(CliError::config)?),
        Some(GraphKind::Cpdag) => {
            truth_file.to_pattern(PatternKind::Cpdag).map_err(CliError::config)?
        }
        Some(GraphKind::Pag) => {
            truth_file.to_pattern(PatternKind::Pag).map_err(CliError::config)?
        }
    };
    if truth.kind() != kind {
        return Err(CliError::Config(format!(
            "learned pattern is {:?} but the truth resolves to {:?}",
            kind,
            truth.kind()
        )));
    }
    let report = shd(&learned, &truth).map_err(CliError::config)?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(CliError::runtime)?);
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let format = EmitFormat::from_str(&args.format).map_err(CliError::Config)?;
    let mut cfg = ExperimentConfig::from_path(&args.config).map_err(CliError::config)?;
    if let Some(w) = args.workers {
        cfg.workers = Some(w);
    }
    cfg.validate().map_err(CliError::config)?;

    match args.dropout {
        Some(fraction) => {
            let cmp = dropout_experiment(&cfg, fraction).map_err(CliError::runtime)?;
            std::fs::create_dir_all(&args.out_dir).map_err(CliError::runtime)?;
            emit_results(&cmp.baseline, format, args.out_dir.join("baseline"))
                .map_err(CliError::runtime)?;
            emit_results(&cmp.with_dropout, format, args.out_dir.join("dropout"))
                .map_err(CliError::runtime)?;
            let deltas_path = args.out_dir.join("deltas.json");
            std::fs::write(
                &deltas_path,
                serde_json::to_string_pretty(&cmp.deltas).map_err(CliError::runtime)?,
            )
            .map_err(CliError::runtime)?;
            eprintln!("wrote dropout comparison to {}", args.out_dir.display());
        }
        None => {
            let output = run_experiment(&cfg).map_err(|e| match e {
                fedcausal::harness::HarnessError::Config(msg) => CliError::Config(msg),
                other => CliError::runtime(other),
            })?;
            let written =
                emit_results(&output, format, &args.out_dir).map_err(CliError::runtime)?;
            for path in written {
                eprintln!("wrote {}", path.display());
            }
            for row in &output.summary {
                println!(
                    "{:<16} K={:<3} runs={} shd={:.2}+/-{:.2} queries={:.0}",
                    row.algorithm,
                    row.clients,
                    row.runs,
                    row.shd_mean,
                    row.shd_std,
                    row.ci_queries_mean
                );
            }
        }
    }
    Ok(())
}
