//! The `buildtune` command line.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data errors. Results
//! go to `--out` (or standard output), diagnostics to standard error.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::index;
use serde::Serialize;

use crate::analysis::{self, DEFAULT_CONSTRAINT_THRESHOLD};
use crate::buildsim::{self, BenchmarkSpec, DomainSizes, LatencyModel, PlantedRuleSet, SyntheticOracle};
use crate::configspace::{Configuration, DependencyGraph};
use crate::dataset::{self, Dataset};
use crate::metrics::{self, ExperimentOptions};
use crate::sampler::{self, CandidateMode, DatasetOracle, SamplerConfig, Strategy};
use crate::seeding;
use crate::surrogate::{self, FactorModel};

#[derive(Debug, Parser)]
#[command(name = "buildtune", version, about = "Adaptive sampling of buildable package configurations")]
pub struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, env = "BUILDTUNE_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Progress messages on standard error.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the adaptive sampling loop against an oracle and write a trace.
    Run(RunArgs),
    /// Precision/recall sweep over a labeled dataset.
    Eval(EvalArgs),
    /// Train/test AUPRC of each strategy.
    Auprc(AuprcArgs),
    /// Fit a surrogate on a dataset and export it as JSON.
    Fit(FitArgs),
    /// Rank packages and edges by good/bad divergence.
    Importance(ImportanceArgs),
    /// Per-edge compatibility matrices and extracted constraints.
    Heatmap(HeatmapArgs),
    /// Simulate a parallel build of a set of configurations.
    Simulate(SimulateArgs),
    /// Generate a synthetic graph with planted incompatibilities.
    GenSynthetic(GenArgs),
    /// Dataset size, success count and dependency count.
    Summary(SummaryArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SummaryFormat {
    Json,
    Text,
}

/// Where labels come from: `dataset:<path>` or `synthetic:<rules.json>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleSpec {
    Dataset(PathBuf),
    Synthetic(PathBuf),
}

impl std::str::FromStr for OracleSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("dataset", p)) if !p.is_empty() => Ok(OracleSpec::Dataset(p.into())),
            Some(("synthetic", p)) if !p.is_empty() => Ok(OracleSpec::Synthetic(p.into())),
            _ => Err(format!("expected dataset:<path> or synthetic:<path>, got {s:?}")),
        }
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Labeled configurations (JSONL).
    #[arg(long)]
    pub dataset: PathBuf,
    /// Graph file; defaults to the one named in the dataset header.
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub oracle: OracleSpec,
    #[arg(long, default_value = "bayesian")]
    pub strategy: Strategy,
    #[arg(long, default_value_t = 100)]
    pub budget: usize,
    #[arg(long, default_value_t = sampler::DEFAULT_BOOTSTRAP)]
    pub bootstrap: usize,
    /// `exhaustive` or `pool:<k>`.
    #[arg(long, default_value = "exhaustive")]
    pub candidates: CandidateMode,
    #[arg(long, default_value_t = surrogate::DEFAULT_SMOOTHING)]
    pub smoothing: f64,
    /// Trace output (JSONL); standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also save the final surrogate.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated strategies.
    #[arg(long, value_delimiter = ',', default_value = "bayesian,crowd,random")]
    pub strategies: Vec<Strategy>,
    /// Comma-separated sample sizes (bootstrap included).
    #[arg(long, value_delimiter = ',', default_value = "20,40,60,80,100")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = metrics::DEFAULT_REPETITIONS)]
    pub repetitions: usize,
    #[arg(long, default_value_t = sampler::DEFAULT_BOOTSTRAP)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = surrogate::DEFAULT_SMOOTHING)]
    pub smoothing: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuprcArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_delimiter = ',', default_value = "bayesian,crowd,random")]
    pub strategies: Vec<Strategy>,
    #[arg(long, default_value_t = metrics::DEFAULT_REPETITIONS)]
    pub repetitions: usize,
    /// Adaptive selections on the train split.
    #[arg(long, default_value_t = metrics::DEFAULT_SELECTIONS)]
    pub selections: usize,
    #[arg(long, default_value_t = sampler::DEFAULT_BOOTSTRAP)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = metrics::DEFAULT_TRAIN_FRACTION)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = surrogate::DEFAULT_SMOOTHING)]
    pub smoothing: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = surrogate::DEFAULT_SMOOTHING)]
    pub smoothing: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A surrogate either loaded from `--model` or fitted from `--dataset`.
#[derive(Debug, Args)]
pub struct ModelSource {
    #[arg(long, conflicts_with_all = ["dataset", "graph"], required_unless_present = "dataset")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, requires = "dataset")]
    pub graph: Option<PathBuf>,
    #[arg(long, default_value_t = surrogate::DEFAULT_SMOOTHING)]
    pub smoothing: f64,
}

#[derive(Debug, Args)]
pub struct ImportanceArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// `parent:child`; repeatable. Every edge when absent.
    #[arg(long = "edge")]
    pub edges: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_CONSTRAINT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Planted rules deciding each unit's own build outcome.
    #[arg(long)]
    pub rules: PathBuf,
    /// Configurations to build; otherwise `--sample` random ones.
    #[arg(long, conflicts_with = "sample")]
    pub dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub sample: usize,
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    /// `unit` or `lognormal:<mu>,<sigma>`.
    #[arg(long, default_value = "unit")]
    pub latency: String,
    /// Include the start/finish event log.
    #[arg(long)]
    pub events: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 8)]
    pub packages: usize,
    /// Comma-separated per-package domain sizes, root first.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["domain_min", "domain_max"])]
    pub domains: Option<Vec<usize>>,
    #[arg(long, default_value_t = 2)]
    pub domain_min: usize,
    #[arg(long, default_value_t = 4)]
    pub domain_max: usize,
    /// Fraction of edges that may carry forbidden pairs.
    #[arg(long, default_value_t = 0.5)]
    pub rule_density: f64,
    #[arg(long, default_value_t = 0.1)]
    pub target_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Also write every configuration labeled by the rules.
    #[arg(long)]
    pub enumerate: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SummaryArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = SummaryFormat::Text)]
    pub format: SummaryFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failure that maps to exit status 1 (usage) or 2 (data).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

fn data<E: fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn dispatch<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    1
                }
            };
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// Entry point for the binary.
pub fn main_with_env() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    dispatch(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn emit(out: &Option<PathBuf>, stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(io_at(path)),
        None => stdout.write_all(text.as_bytes()).map_err(data),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn load_graph(path: &Path) -> Result<Arc<DependencyGraph>, CliError> {
    DependencyGraph::load(path)
        .map(Arc::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_data(args: &DataArgs) -> Result<Dataset, CliError> {
    let ds = match &args.graph {
        Some(g) => dataset::load_dataset_with_graph(&args.dataset, load_graph(g)?),
        None => dataset::load_dataset(&args.dataset),
    };
    ds.map_err(|e| CliError::Data(format!("{}: {e}", args.dataset.display())))
}

fn load_model(src: &ModelSource) -> Result<FactorModel, CliError> {
    if let Some(path) = &src.model {
        return FactorModel::load(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())));
    }
    let dataset = src.dataset.clone().expect("clap enforces --model or --dataset");
    let ds = load_data(&DataArgs {
        dataset,
        graph: src.graph.clone(),
    })?;
    surrogate::fit(ds.records(), Arc::clone(ds.graph_arc()), src.smoothing).map_err(data)
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let seed = cli.seed;
    let say = |stderr: &mut dyn Write, msg: String| {
        if cli.verbose > 0 {
            let _ = writeln!(stderr, "{msg}");
        }
    };
    match &cli.command {
        Command::Run(a) => {
            let graph = load_graph(&a.graph)?;
            let cfg = SamplerConfig {
                strategy: a.strategy,
                bootstrap_size: a.bootstrap,
                budget: a.budget,
                candidate_mode: a.candidates,
                seed,
                smoothing: a.smoothing,
            };
            cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let out = match &a.oracle {
                OracleSpec::Dataset(p) => {
                    let ds = dataset::load_dataset_with_graph(p, Arc::clone(&graph))
                        .map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
                    sampler::run(&DatasetOracle::new(ds), &graph, &cfg)
                }
                OracleSpec::Synthetic(p) => {
                    let rules = PlantedRuleSet::load(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
                    let oracle = SyntheticOracle::new(Arc::clone(&graph), &rules, seed).map_err(data)?;
                    sampler::run(&oracle, &graph, &cfg)
                }
            }
            .map_err(data)?;
            say(
                stderr,
                format!("{} of {} sampled configurations built", out.history.good_count(), out.history.len()),
            );
            let mut text = String::new();
            for entry in &out.trace {
                text.push_str(&serde_json::to_string(entry).expect("trace serializes"));
                text.push('\n');
            }
            emit(&a.out, stdout, &text)?;
            if let Some(path) = &a.model_out {
                out.model.save(path).map_err(io_at(path))?;
            }
        }
        Command::Eval(a) => {
            let ds = load_data(&a.data)?;
            let opts = ExperimentOptions {
                bootstrap_size: a.bootstrap,
                smoothing: a.smoothing,
                ..ExperimentOptions::default()
            };
            let reports =
                metrics::sweep_experiment(&ds, &a.strategies, &a.sizes, a.repetitions, seed, &opts).map_err(data)?;
            let text = match a.format {
                Format::Csv => metrics::reports_to_csv(&reports),
                Format::Json => to_json(&reports),
            };
            emit(&a.out, stdout, &text)?;
        }
        Command::Auprc(a) => {
            let ds = load_data(&a.data)?;
            let opts = ExperimentOptions {
                bootstrap_size: a.bootstrap,
                smoothing: a.smoothing,
                selections: a.selections,
                train_fraction: a.train_fraction,
            };
            let mut strategies = a.strategies.clone();
            strategies.sort_by_key(|s| s.name());
            strategies.dedup();
            let seeds = metrics::repetition_seeds(seed, a.repetitions);
            let mut rows = Vec::new();
            for &strategy in &strategies {
                let values = seeds
                    .iter()
                    .map(|&s| metrics::auprc_experiment(&ds, strategy, s, &opts))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(data)?;
                rows.push(AuprcRow {
                    strategy,
                    mean: metrics::mean(&values),
                    sd: metrics::std_dev(&values),
                    seeds: seeds.clone(),
                    values,
                });
            }
            let text = match a.format {
                Format::Json => to_json(&rows),
                Format::Csv => {
                    let mut s = String::from("strategy,repetitions,mean_auprc,sd_auprc\n");
                    for r in &rows {
                        s.push_str(&format!("{},{},{},{}\n", r.strategy, r.values.len(), r.mean, r.sd));
                    }
                    s
                }
            };
            emit(&a.out, stdout, &text)?;
        }
        Command::Fit(a) => {
            let ds = load_data(&a.data)?;
            let model = surrogate::fit(ds.records(), Arc::clone(ds.graph_arc()), a.smoothing).map_err(data)?;
            emit(&a.out, stdout, &(model.to_json() + "\n"))?;
        }
        Command::Importance(a) => {
            let model = load_model(&a.source)?;
            let entries = analysis::importance_ranking(&model, a.top_k);
            emit(&a.out, stdout, &analysis::importance_csv(&entries))?;
        }
        Command::Heatmap(a) => {
            if !(0.0..=1.0).contains(&a.threshold) {
                return Err(CliError::Usage(format!("--threshold must lie in [0, 1], got {}", a.threshold)));
            }
            let model = load_model(&a.source)?;
            let g = model.graph();
            let pairs: Vec<(String, String)> = if a.edges.is_empty() {
                g.edges()
                    .iter()
                    .map(|&(p, c)| (g.name(p).to_string(), g.name(c).to_string()))
                    .collect()
            } else {
                a.edges
                    .iter()
                    .map(|e| {
                        e.split_once(':')
                            .map(|(p, c)| (p.to_string(), c.to_string()))
                            .ok_or_else(|| CliError::Usage(format!("--edge expects parent:child, got {e:?}")))
                    })
                    .collect::<Result<_, _>>()?
            };
            std::fs::create_dir_all(&a.out_dir).map_err(io_at(&a.out_dir))?;
            let mut constraints = Vec::new();
            for (parent, child) in &pairs {
                let matrix = analysis::pair_compatibility(&model, parent, child).map_err(data)?;
                let path = a.out_dir.join(format!("{parent}+{child}.csv"));
                std::fs::write(&path, matrix.to_csv()).map_err(io_at(&path))?;
                constraints.extend(analysis::extract_constraints(&matrix, a.threshold).map_err(data)?);
            }
            let path = a.out_dir.join("constraints.json");
            std::fs::write(&path, to_json(&constraints)).map_err(io_at(&path))?;
            say(stderr, format!("{} constraints over {} edges", constraints.len(), pairs.len()));
        }
        Command::Simulate(a) => {
            let graph = load_graph(&a.graph)?;
            let rules = PlantedRuleSet::load(&a.rules).map_err(|e| CliError::Data(format!("{}: {e}", a.rules.display())))?;
            let oracle = SyntheticOracle::new(Arc::clone(&graph), &rules, seed).map_err(data)?;
            let latency = parse_latency(&a.latency, seed)?;
            if a.workers == 0 {
                return Err(CliError::Usage("--workers must be at least 1".into()));
            }
            let configs: Vec<Configuration> = match &a.dataset {
                Some(p) => dataset::load_dataset_with_graph(p, Arc::clone(&graph))
                    .map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?
                    .records()
                    .iter()
                    .map(|r| r.config.clone())
                    .collect(),
                None => sample_configs(&graph, a.sample, seed),
            };
            let dag = buildsim::build_dag(Arc::clone(&graph), &configs);
            let mut report = buildsim::simulate(
                &dag,
                |_, unit| oracle.unit_outcome(&dag, unit),
                a.workers,
                |_, unit| latency.latency(unit),
            )
            .map_err(data)?;
            if !a.events {
                report.events.clear();
            }
            emit(&a.out, stdout, &to_json(&report))?;
        }
        Command::GenSynthetic(a) => {
            let spec = BenchmarkSpec {
                packages: a.domains.as_ref().map_or(a.packages, |d| d.len()),
                domain_sizes: match &a.domains {
                    Some(d) => DomainSizes::Fixed(d.clone()),
                    None => DomainSizes::Range {
                        min: a.domain_min,
                        max: a.domain_max,
                    },
                },
                rule_density: a.rule_density,
                target_success_rate: a.target_rate,
                noise: a.noise,
                seed,
            };
            let bench = buildsim::generate_benchmark(&spec).map_err(|e| match e {
                buildsim::SimError::BadSpec(_) | buildsim::SimError::BadNoise(_) => CliError::Usage(e.to_string()),
                other => data(other),
            })?;
            let dir = &a.out_dir;
            std::fs::create_dir_all(dir).map_err(io_at(dir))?;
            let graph_path = dir.join("graph.json");
            bench.graph.save(&graph_path).map_err(io_at(&graph_path))?;
            let rules_path = dir.join("rules.json");
            bench.rules.save(&rules_path).map_err(io_at(&rules_path))?;
            if a.enumerate {
                let oracle = SyntheticOracle::new(Arc::clone(&bench.graph), &bench.rules, seed).map_err(data)?;
                let ds = oracle.enumerate_dataset().map_err(data)?;
                let path = dir.join("dataset.jsonl");
                ds.save(&path, "graph.json").map_err(io_at(&path))?;
                say(stderr, format!("{} of {} configurations build", ds.good_count(), ds.len()));
            }
        }
        Command::Summary(a) => {
            let ds = load_data(&a.data)?;
            let summary = dataset::summarize(&ds);
            let text = match a.format {
                SummaryFormat::Json => to_json(&summary),
                SummaryFormat::Text => format!("{summary}\n"),
            };
            emit(&a.out, stdout, &text)?;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct AuprcRow {
    strategy: Strategy,
    mean: f64,
    sd: f64,
    seeds: Vec<u64>,
    values: Vec<f64>,
}

fn parse_latency(text: &str, seed: u64) -> Result<LatencyModel, CliError> {
    let bad = || CliError::Usage(format!("--latency expects unit or lognormal:<mu>,<sigma>, got {text:?}"));
    if text == "unit" {
        return Ok(LatencyModel::Unit);
    }
    let params = text.strip_prefix("lognormal:").ok_or_else(bad)?;
    let (mu, sigma) = params.split_once(',').ok_or_else(bad)?;
    let mu: f64 = mu.trim().parse().map_err(|_| bad())?;
    let sigma: f64 = sigma.trim().parse().map_err(|_| bad())?;
    if !mu.is_finite() || !(sigma.is_finite() && sigma >= 0.0) {
        return Err(bad());
    }
    Ok(LatencyModel::LogNormal {
        mu,
        sigma,
        seed: seeding::child_seed(seed, "latency", 0),
    })
}

/// Distinct uniform configurations, or the whole space when it is smaller.
fn sample_configs(graph: &DependencyGraph, n: usize, seed: u64) -> Vec<Configuration> {
    let mut rng = seeding::stream(seed, "simulate");
    match graph.space_size_u64() {
        Some(total) if total <= sampler::MAX_EXHAUSTIVE => {
            let all: Vec<Configuration> = graph.configurations().collect();
            let mut picked = index::sample(&mut rng, all.len(), n.min(all.len())).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| all[i].clone()).collect()
        }
        _ => (0..n)
            .map(|_| crate::configspace::random_configuration(graph, &mut rng))
            .collect(),
    }
}
