//! The adaptive sampling loop: bootstrap uniformly, then repeatedly fit the
//! surrogate, pick the highest-scoring unevaluated candidate, build it, and
//! fold the outcome back into the history.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configspace::{digest, random_configuration, ConfigDigest, Configuration, DependencyGraph};
use crate::dataset::{BuildRecord, Dataset};
use crate::seeding;
use crate::surrogate::{self, FactorModel, Score, ScoreKind, SurrogateError};

pub const DEFAULT_BOOTSTRAP: usize = 20;
pub const DEFAULT_POOL_SIZE: usize = 1000;
/// Largest space enumerated in exhaustive mode.
pub const MAX_EXHAUSTIVE: u64 = 1_000_000;

const PARALLEL_SCORING_THRESHOLD: usize = 4096;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("configuration {0} is not known to the oracle")]
    Unknown(ConfigDigest),
    #[error("{0}")]
    Failed(String),
}

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid sampler configuration: {0}")]
    Config(String),
    #[error("only {available} distinct candidates, bootstrap needs {needed}")]
    Exhausted { available: u64, needed: usize },
    #[error("every candidate has already been evaluated")]
    NoCandidates,
    #[error("space of {0} configurations is too large for exhaustive candidates; use a pool")]
    SpaceTooLarge(String),
    #[error("configuration {0} evaluated twice")]
    DuplicateEntry(ConfigDigest),
    #[error("oracle failed at iteration {iteration}: {source}")]
    Oracle {
        iteration: usize,
        #[source]
        source: OracleError,
    },
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
}

/// Ordered evaluation history with O(1) membership by digest.
#[derive(Debug, Clone)]
pub struct ObservationHistory {
    graph: Arc<DependencyGraph>,
    entries: Vec<BuildRecord>,
    digests: Vec<ConfigDigest>,
    seen: HashSet<ConfigDigest>,
}

impl ObservationHistory {
    pub fn new(graph: Arc<DependencyGraph>) -> Self {
        Self {
            graph,
            entries: Vec::new(),
            digests: Vec::new(),
            seen: HashSet::new(),
        }
    }

    pub fn push(&mut self, record: BuildRecord) -> Result<ConfigDigest, SamplerError> {
        let d = digest(&self.graph, &record.config);
        self.push_with_digest(record, d)?;
        Ok(d)
    }

    fn push_with_digest(&mut self, record: BuildRecord, d: ConfigDigest) -> Result<(), SamplerError> {
        if !self.seen.insert(d) {
            return Err(SamplerError::DuplicateEntry(d));
        }
        self.entries.push(record);
        self.digests.push(d);
        Ok(())
    }

    pub fn contains(&self, d: &ConfigDigest) -> bool {
        self.seen.contains(d)
    }

    pub fn records(&self) -> &[BuildRecord] {
        &self.entries
    }

    pub fn digests(&self) -> &[ConfigDigest] {
        &self.digests
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn good_count(&self) -> usize {
        self.entries.iter().filter(|r| r.built).count()
    }

    pub fn graph(&self) -> &DependencyGraph {
        &self.graph
    }

    /// First `k` entries as a new history.
    pub fn prefix(&self, k: usize) -> ObservationHistory {
        let k = k.min(self.len());
        Self {
            graph: Arc::clone(&self.graph),
            entries: self.entries[..k].to_vec(),
            digests: self.digests[..k].to_vec(),
            seen: self.digests[..k].iter().copied().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Bayesian,
    Crowd,
    Random,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Bayesian, Strategy::Crowd, Strategy::Random];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Bayesian => "bayesian",
            Strategy::Crowd => "crowd",
            Strategy::Random => "random",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "bayesian" | "ei" => Ok(Strategy::Bayesian),
            "crowd" | "wisdom" => Ok(Strategy::Crowd),
            "random" => Ok(Strategy::Random),
            other => Err(format!("unknown strategy {other:?} (expected bayesian, crowd or random)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CandidateMode {
    /// Every configuration the oracle knows, or the whole space.
    Exhaustive,
    /// `k` fresh uniform draws per iteration.
    Pool(usize),
}

impl FromStr for CandidateMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "exhaustive" {
            return Ok(CandidateMode::Exhaustive);
        }
        let k = s
            .strip_prefix("pool:")
            .or_else(|| s.strip_prefix("pool"))
            .ok_or_else(|| format!("unknown candidate mode {s:?}"))?;
        if k.is_empty() {
            return Ok(CandidateMode::Pool(DEFAULT_POOL_SIZE));
        }
        k.parse()
            .map(CandidateMode::Pool)
            .map_err(|e| format!("bad pool size {k:?}: {e}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub strategy: Strategy,
    pub bootstrap_size: usize,
    pub budget: usize,
    pub candidate_mode: CandidateMode,
    pub seed: u64,
    pub smoothing: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Bayesian,
            bootstrap_size: DEFAULT_BOOTSTRAP,
            budget: 100,
            candidate_mode: CandidateMode::Exhaustive,
            seed: 42,
            smoothing: surrogate::DEFAULT_SMOOTHING,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.bootstrap_size == 0 {
            return Err(SamplerError::Config("bootstrap size must be at least 1".into()));
        }
        if let CandidateMode::Pool(0) = self.candidate_mode {
            return Err(SamplerError::Config("pool size must be at least 1".into()));
        }
        if !(self.smoothing.is_finite() && self.smoothing > 0.0) {
            return Err(SamplerError::Config(format!("smoothing must be positive, got {}", self.smoothing)));
        }
        Ok(())
    }
}

/// The expensive build step, `f(x)`.
pub trait BuildOracle: Sync {
    fn evaluate(&self, config: &Configuration) -> Result<bool, OracleError>;

    /// The finite set of legal configurations, when the oracle has one.
    fn candidates(&self) -> Option<&[Configuration]> {
        None
    }
}

/// Replays recorded outcomes; the candidate set is the dataset itself.
#[derive(Debug, Clone)]
pub struct DatasetOracle {
    dataset: Dataset,
    configs: Vec<Configuration>,
    outcomes: HashMap<ConfigDigest, bool>,
}

impl DatasetOracle {
    pub fn new(dataset: Dataset) -> Self {
        let configs = dataset.records().iter().map(|r| r.config.clone()).collect();
        let outcomes = dataset
            .digests()
            .iter()
            .zip(dataset.records())
            .map(|(d, r)| (*d, r.built))
            .collect();
        Self {
            dataset,
            configs,
            outcomes,
        }
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }
}

impl BuildOracle for DatasetOracle {
    fn evaluate(&self, config: &Configuration) -> Result<bool, OracleError> {
        let d = digest(self.dataset.graph(), config);
        self.outcomes.get(&d).copied().ok_or(OracleError::Unknown(d))
    }

    fn candidates(&self) -> Option<&[Configuration]> {
        Some(&self.configs)
    }
}

/// Candidate configurations with precomputed digests.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    configs: Vec<Configuration>,
    digests: Vec<ConfigDigest>,
}

impl CandidateSet {
    /// Deduplicates by digest, keeping first occurrences.
    pub fn new(graph: &DependencyGraph, configs: impl IntoIterator<Item = Configuration>) -> Self {
        let mut seen = HashSet::new();
        let mut out = Self {
            configs: Vec::new(),
            digests: Vec::new(),
        };
        for c in configs {
            let d = digest(graph, &c);
            if seen.insert(d) {
                out.configs.push(c);
                out.digests.push(d);
            }
        }
        out
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn digests(&self) -> &[ConfigDigest] {
        &self.digests
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }
}

/// A chosen candidate and its strategy score.
#[derive(Debug, Clone)]
pub struct Selection {
    pub index: usize,
    pub config: Configuration,
    pub digest: ConfigDigest,
    pub score: Score,
}

/// Draws `cfg.bootstrap_size` distinct configurations uniformly at random
/// and evaluates each.
pub fn bootstrap<O: BuildOracle + ?Sized, R: Rng + ?Sized>(
    oracle: &O,
    graph: &Arc<DependencyGraph>,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<ObservationHistory, SamplerError> {
    cfg.validate()?;
    let needed = cfg.bootstrap_size;
    let mut history = ObservationHistory::new(Arc::clone(graph));
    let picks: Vec<Configuration> = match oracle.candidates() {
        Some(list) => {
            let set = CandidateSet::new(graph, list.iter().cloned());
            if set.len() < needed {
                return Err(SamplerError::Exhausted {
                    available: set.len() as u64,
                    needed,
                });
            }
            index::sample(rng, set.len(), needed)
                .into_iter()
                .map(|i| set.configs[i].clone())
                .collect()
        }
        None => {
            if let Some(size) = graph.space_size_u64() {
                if size < needed as u64 {
                    return Err(SamplerError::Exhausted { available: size, needed });
                }
            }
            let mut seen = HashSet::new();
            let mut picks = Vec::with_capacity(needed);
            while picks.len() < needed {
                let c = random_configuration(graph, rng);
                if seen.insert(digest(graph, &c)) {
                    picks.push(c);
                }
            }
            picks
        }
    };
    for config in picks {
        let built = oracle
            .evaluate(&config)
            .map_err(|source| SamplerError::Oracle { iteration: 0, source })?;
        history.push(BuildRecord::new(config, built))?;
    }
    Ok(history)
}

/// Ranking key: larger is better. Bayesian ranks by `ln P_good - ln P_bad`,
/// which orders candidates exactly as EI does without saturating near `1/alpha`.
fn rank_key(model: &FactorModel, strategy: Strategy, config: &Configuration) -> f64 {
    match strategy {
        Strategy::Bayesian => -model.log_ratio(config),
        Strategy::Crowd => model.crowd_log_score(config),
        Strategy::Random => 0.0,
    }
}

fn score_of(model: &FactorModel, strategy: Strategy, config: &Configuration) -> Score {
    match strategy {
        Strategy::Bayesian => model.expected_improvement(config),
        Strategy::Crowd => model.crowd_score(config),
        Strategy::Random => Score {
            value: 0.0,
            kind: ScoreKind::Random,
        },
    }
}

/// Picks the unevaluated candidate with the highest score, breaking ties
/// uniformly with `rng`. For [`Strategy::Random`] every unevaluated
/// candidate ties.
pub fn select_next<R: Rng + ?Sized>(
    model: &FactorModel,
    candidates: &CandidateSet,
    history: &ObservationHistory,
    strategy: Strategy,
    rng: &mut R,
) -> Result<Selection, SamplerError> {
    let key_of = |i: usize| -> Option<f64> {
        if history.contains(&candidates.digests[i]) {
            None
        } else {
            Some(rank_key(model, strategy, &candidates.configs[i]))
        }
    };
    let keys: Vec<Option<f64>> = if candidates.len() >= PARALLEL_SCORING_THRESHOLD {
        (0..candidates.len()).into_par_iter().map(key_of).collect()
    } else {
        (0..candidates.len()).map(key_of).collect()
    };

    let mut best = f64::NEG_INFINITY;
    let mut ties: Vec<usize> = Vec::new();
    for (i, key) in keys.iter().enumerate() {
        let Some(k) = *key else { continue };
        if k > best {
            best = k;
            ties.clear();
            ties.push(i);
        } else if k == best {
            ties.push(i);
        }
    }
    if ties.is_empty() {
        // every remaining key is -inf (crowd with no support): fall back to uniform
        ties = keys
            .iter()
            .enumerate()
            .filter_map(|(i, k)| k.map(|_| i))
            .collect();
    }
    if ties.is_empty() {
        return Err(SamplerError::NoCandidates);
    }
    let index = ties[rng.random_range(0..ties.len())];
    let config = candidates.configs[index].clone();
    Ok(Selection {
        index,
        digest: candidates.digests[index],
        score: score_of(model, strategy, &config),
        config,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub t: usize,
    pub digest: ConfigDigest,
    pub score: f64,
    pub built: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub history: ObservationHistory,
    pub trace: Vec<TraceEntry>,
    /// Model fitted on the final history.
    pub model: FactorModel,
}

/// Runs bootstrap followed by up to `cfg.budget` adaptive selections.
pub fn run<O: BuildOracle + ?Sized>(
    oracle: &O,
    graph: &Arc<DependencyGraph>,
    cfg: &SamplerConfig,
) -> Result<RunOutput, SamplerError> {
    cfg.validate()?;
    let mut boot_rng = seeding::stream(cfg.seed, "bootstrap");
    let mut tie_rng = seeding::stream(cfg.seed, "tie-break");
    let mut pool_rng = seeding::stream(cfg.seed, "pool");

    let mut history = bootstrap(oracle, graph, cfg, &mut boot_rng)?;
    let mut model = surrogate::fit(history.records(), Arc::clone(graph), cfg.smoothing)?;
    let mut trace = Vec::new();

    let listed = oracle
        .candidates()
        .map(|list| CandidateSet::new(graph, list.iter().cloned()));
    let fixed = match cfg.candidate_mode {
        CandidateMode::Exhaustive => Some(match &listed {
            Some(set) => set.clone(),
            None => match graph.space_size_u64() {
                Some(n) if n <= MAX_EXHAUSTIVE => CandidateSet::new(graph, graph.configurations()),
                _ => return Err(SamplerError::SpaceTooLarge(graph.space_size().to_string())),
            },
        }),
        CandidateMode::Pool(_) => None,
    };
    let space = graph.space_size_u64();

    for t in 1..=cfg.budget {
        let pool;
        let candidates = match (&fixed, cfg.candidate_mode) {
            (Some(set), _) => {
                if history.len() >= set.len() {
                    break;
                }
                set
            }
            (None, CandidateMode::Pool(k)) => {
                match &listed {
                    Some(all) => {
                        if history.len() >= all.len() {
                            break;
                        }
                        pool = subsample(all, &history, k, &mut pool_rng);
                    }
                    None => {
                        if space.is_some_and(|n| history.len() as u64 >= n) {
                            break;
                        }
                        pool = draw_pool(graph, &history, k, &mut pool_rng);
                    }
                }
                &pool
            }
            (None, CandidateMode::Exhaustive) => unreachable!("exhaustive mode always has a fixed set"),
        };
        let pick = match select_next(&model, candidates, &history, cfg.strategy, &mut tie_rng) {
            Ok(pick) => pick,
            Err(SamplerError::NoCandidates) => break,
            Err(e) => return Err(e),
        };
        let built = oracle
            .evaluate(&pick.config)
            .map_err(|source| SamplerError::Oracle { iteration: t, source })?;
        let record = BuildRecord::new(pick.config, built);
        model = model.refit_incremental(&record);
        history.push_with_digest(record, pick.digest)?;
        trace.push(TraceEntry {
            t,
            digest: pick.digest,
            score: pick.score.value,
            built,
        });
    }
    Ok(RunOutput { history, trace, model })
}

const POOL_MAX_ROUNDS: usize = 64;

/// Up to `k` unevaluated entries of a known candidate list, kept in list order.
fn subsample<R: Rng + ?Sized>(
    all: &CandidateSet,
    history: &ObservationHistory,
    k: usize,
    rng: &mut R,
) -> CandidateSet {
    let open: Vec<usize> = (0..all.len()).filter(|&i| !history.contains(&all.digests[i])).collect();
    let mut picked = index::sample(rng, open.len(), k.min(open.len())).into_vec();
    picked.sort_unstable();
    CandidateSet {
        configs: picked.iter().map(|&j| all.configs[open[j]].clone()).collect(),
        digests: picked.iter().map(|&j| all.digests[open[j]]).collect(),
    }
}

fn draw_pool<R: Rng + ?Sized>(
    graph: &DependencyGraph,
    history: &ObservationHistory,
    k: usize,
    rng: &mut R,
) -> CandidateSet {
    let mut seen = HashSet::new();
    let mut set = CandidateSet {
        configs: Vec::with_capacity(k),
        digests: Vec::with_capacity(k),
    };
    for _ in 0..POOL_MAX_ROUNDS {
        for _ in 0..k {
            let c = random_configuration(graph, rng);
            let d = digest(graph, &c);
            if !history.contains(&d) && seen.insert(d) {
                set.configs.push(c);
                set.digests.push(d);
            }
        }
        if !set.is_empty() {
            break;
        }
    }
    set
}
