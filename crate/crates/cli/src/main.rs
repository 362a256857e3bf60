use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use brooks_core::acd::{compute_acd, default_c_sparse, degree_bound_check, parse_rational, verify_acd, AcdConfig};
use brooks_core::classify::{classify_acs, fine_partition, Thresholds};
use brooks_core::experiment::{run_case, SweepRow, SweepSpec, SCHEMA_VERSION};
use brooks_core::generators::{generate_with, Family, GenParams, GeneratedInstance};
use brooks_core::oracle::validate_coloring;
use brooks_core::phases::{run_pipeline, PipelineConfig};
use brooks_core::{Color, Graph, PartialColoring, Rational};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Parser)]
#[command(name = "brooks", version, about = "Delta-coloring experiments on a round-synchronous simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph from a family.
    Gen(GenArgs),
    /// Compute and verify an almost-clique decomposition.
    Acd(AnalyzeArgs),
    /// Classify almost-cliques and partition the nodes.
    Classify(AnalyzeArgs),
    /// Run the full coloring pipeline.
    Color(ColorArgs),
    /// Check a coloring file against a graph.
    Validate(ValidateArgs),
    /// Sweep families × Δ × seeds, one row per run.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long)]
    family: Option<Family>,
    #[arg(long)]
    delta: Option<usize>,
    /// Disjoint copies (bundles for `mixed`).
    #[arg(long)]
    components: Option<usize>,
    /// Outside slots left free per constructed clique.
    #[arg(long, default_value_t = 0)]
    slack: usize,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// `text` writes the edge-list format; `json` adds the generator metadata.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct InputArgs {
    #[arg(long, conflicts_with = "family")]
    graph: Option<PathBuf>,
    #[command(flatten)]
    family: FamilyArgs,
    /// Rational (`1/32`) or decimal; derived from the input when absent.
    #[arg(long)]
    epsilon: Option<String>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ColorArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    pg: Option<f64>,
    #[arg(long)]
    max_retries: Option<usize>,
    #[arg(long)]
    strict_congest: bool,
    /// Pipeline config JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    graph: PathBuf,
    /// JSON array of colors, or an object with a `coloring` array.
    #[arg(long)]
    coloring: PathBuf,
    /// Number of colors; defaults to Δ.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Comma-separated family names, or `all`.
    #[arg(long, default_value = "all")]
    families: String,
    #[arg(long, value_delimiter = ',', default_value = "16")]
    deltas: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    pg: Option<f64>,
    #[arg(long)]
    max_retries: Option<usize>,
    #[arg(long)]
    strict_congest: bool,
    #[arg(long)]
    components: Option<usize>,
    #[arg(long, default_value_t = 0)]
    slack: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Graph(#[from] brooks_core::GraphError),
    #[error(transparent)]
    Generator(#[from] brooks_core::generators::GenError),
    #[error(transparent)]
    Acd(#[from] brooks_core::acd::AcdError),
    #[error(transparent)]
    Partition(#[from] brooks_core::classify::PartitionError),
    #[error(transparent)]
    Pipeline(#[from] brooks_core::phases::PipelineError),
    #[error("malformed coloring: {0}")]
    Coloring(String),
    #[error("coloring is not a proper {0}-coloring")]
    Invalid(usize),
    #[error(transparent)]
    Output(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Graph(_) => "graph",
            CliError::Generator(_) => "generator",
            CliError::Acd(_) => "acd_failure",
            CliError::Partition(_) => "partition_violation",
            CliError::Pipeline(e) => e.kind(),
            CliError::Coloring(_) => "coloring_format",
            CliError::Invalid(_) => "invalid_coloring",
            CliError::Output(_) | CliError::Csv(_) => "output",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(io_err(path)),
        None => std::io::stdout().write_all(bytes).map_err(io_err(Path::new("<stdout>"))),
    }
}

fn emit_json(out: Option<&Path>, value: &Value) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    emit(out, &bytes)
}

fn parse_eps(s: &str) -> Result<Rational, CliError> {
    parse_rational(s).map_err(|e| CliError::Usage(format!("--epsilon: {e}")))
}

fn build_family(args: &FamilyArgs, seed: u64) -> Result<GeneratedInstance, CliError> {
    let (Some(family), Some(delta)) = (args.family, args.delta) else {
        return Err(CliError::Usage("need --graph, or both --family and --delta".into()));
    };
    let params = GenParams { slack: args.slack, components: args.components };
    Ok(generate_with(family, delta, seed, &params)?)
}

/// `max(1/172, 1/(2Δ))`, capped at the largest admissible ε.
fn auto_epsilon(delta: usize) -> Rational {
    let eps = brooks_core::acd::default_epsilon().max(Rational::new(1, 2 * delta.max(1) as i64));
    eps.min(brooks_core::acd::max_epsilon())
}

fn load_input(input: &InputArgs, seed: u64) -> Result<(Graph, Rational), CliError> {
    let (g, eps) = match &input.graph {
        Some(path) => {
            let g = Graph::load(path)?;
            let eps = auto_epsilon(g.delta());
            (g, eps)
        }
        None => {
            let inst = build_family(&input.family, seed)?;
            let eps = inst.meta.default_epsilon();
            (inst.graph, eps)
        }
    };
    let eps = match &input.epsilon {
        Some(s) => parse_eps(s)?,
        None => eps,
    };
    Ok((g, eps))
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let inst = build_family(&args.family, args.seed)?;
    match args.format {
        Format::Text => emit(args.out.as_deref(), inst.graph.to_text().as_bytes()),
        Format::Json => emit_json(
            args.out.as_deref(),
            &json!({
                "schema_version": SCHEMA_VERSION,
                "meta": inst.meta,
                "n": inst.graph.n(),
                "edges": inst.graph.edges().collect::<Vec<_>>(),
            }),
        ),
        Format::Csv => Err(CliError::Usage("gen writes text or json".into())),
    }
}

fn cmd_acd(args: AnalyzeArgs, classify: bool) -> Result<(), CliError> {
    let (g, eps) = load_input(&args.input, args.seed)?;
    let acd = compute_acd(&g, &AcdConfig::new(eps))?;
    let mut report = json!({
        "schema_version": SCHEMA_VERSION,
        "n": g.n(),
        "delta": g.delta(),
        "acd": acd,
        "report": verify_acd(&g, &acd, default_c_sparse()),
        "degree_bound_violations": degree_bound_check(&g, &acd),
    });
    if classify {
        let cls = classify_acs(&g, &acd, &Thresholds::new(g.delta()));
        let part = fine_partition(&g, &acd, &cls)?;
        report["classification"] = serde_json::to_value(&cls)?;
        report["partition"] = serde_json::to_value(&part)?;
    }
    emit_json(args.out.as_deref(), &report)
}

fn cmd_color(args: ColorArgs) -> Result<(), CliError> {
    let (g, eps) = load_input(&args.input, args.seed)?;
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("--config: {e}")))?
        }
        None => PipelineConfig { epsilon: eps, delta_min: 3, ..PipelineConfig::default() },
    };
    if args.config.is_none() || args.input.epsilon.is_some() {
        config.epsilon = eps;
    }
    config.seed = args.seed;
    if let Some(p) = args.pg {
        config.p_g = p;
    }
    if let Some(r) = args.max_retries {
        config.max_retries = r;
    }
    config.strict_congest |= args.strict_congest;

    let out = run_pipeline(&g, &config)?;
    let valid = validate_coloring(&g, &out.coloring, g.delta());
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "n": g.n(),
        "delta": g.delta(),
        "config": config,
        "valid": valid,
        "coloring": out.coloring.as_slice(),
        "retries": out.retries,
        "failures": out.failures,
        "ledger": out.ledger,
        "metrics": out.metrics,
        "slack": out.slack,
        "pairs": out.pairs,
    });
    emit_json(args.out.as_deref(), &report)
}

fn read_coloring(path: &Path, n: usize) -> Result<PartialColoring, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Coloring(e.to_string()))?;
    let array = match &value {
        Value::Object(o) => o.get("coloring").ok_or_else(|| CliError::Coloring("no `coloring` field".into()))?,
        v => v,
    };
    let colors: Vec<Option<Color>> =
        serde_json::from_value(array.clone()).map_err(|e| CliError::Coloring(e.to_string()))?;
    if colors.len() != n {
        return Err(CliError::Coloring(format!("{} entries for {n} nodes", colors.len())));
    }
    Ok(PartialColoring::from_colors(colors))
}

fn cmd_validate(args: ValidateArgs) -> Result<(), CliError> {
    let g = Graph::load(&args.graph)?;
    let coloring = read_coloring(&args.coloring, g.n())?;
    let k = args.k.unwrap_or(g.delta());
    let valid = validate_coloring(&g, &coloring, k);
    emit_json(args.out.as_deref(), &json!({ "schema_version": SCHEMA_VERSION, "k": k, "valid": valid }))?;
    if valid {
        Ok(())
    } else {
        Err(CliError::Invalid(k))
    }
}

fn parse_families(s: &str) -> Result<Vec<Family>, CliError> {
    if s == "all" {
        return Ok(Family::ALL.to_vec());
    }
    s.split(',').map(|f| f.trim().parse().map_err(|e: brooks_core::generators::GenError| CliError::Usage(e.to_string()))).collect()
}

fn sim_threads() -> Option<usize> {
    std::env::var("BROOKS_SIM_THREADS").ok()?.parse().ok().filter(|&t| t > 0)
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let mut pipeline = PipelineConfig { delta_min: 3, ..PipelineConfig::default() };
    if let Some(p) = args.pg {
        pipeline.p_g = p;
    }
    if let Some(r) = args.max_retries {
        pipeline.max_retries = r;
    }
    pipeline.strict_congest = args.strict_congest;
    let spec = SweepSpec {
        families: parse_families(&args.families)?,
        deltas: args.deltas.clone(),
        seeds: args.seeds,
        epsilon: args.epsilon.as_deref().map(parse_eps).transpose()?,
        params: GenParams { slack: args.slack, components: args.components },
        pipeline,
    };

    // Rows come back in case order whatever the thread count.
    let cases = spec.cases();
    let run = || -> Vec<SweepRow> { cases.par_iter().map(|&(f, d, s)| run_case(&spec, f, d, s)).collect() };
    let rows = match sim_threads() {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Usage(format!("BROOKS_SIM_THREADS: {e}")))?
            .install(run),
        None => run(),
    };

    match args.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(SweepRow::header())?;
            for row in &rows {
                w.write_record(row.record())?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
            emit(args.out.as_deref(), &bytes)
        }
        Format::Json => emit_json(
            args.out.as_deref(),
            &json!({ "schema_version": SCHEMA_VERSION, "spec": spec, "rows": rows }),
        ),
        Format::Text => Err(CliError::Usage("experiment writes csv or json".into())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Acd(a) => cmd_acd(a, false),
        Command::Classify(a) => cmd_acd(a, true),
        Command::Color(a) => cmd_color(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Experiment(a) => cmd_experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let obj = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{obj}");
            ExitCode::FAILURE
        }
    }
}
