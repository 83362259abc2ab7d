//! Precision, recall and AUPRC, plus the repeated-run and train/test
//! evaluation protocols built on them.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configspace::ConfigDigest;
use crate::dataset::{split_train_test, BuildRecord, Dataset, DatasetError};
use crate::sampler::{self, CandidateMode, DatasetOracle, SamplerConfig, SamplerError, Strategy};
use crate::seeding;
use crate::surrogate::{self, FactorModel};

pub const DEFAULT_REPETITIONS: usize = 10;
pub const DEFAULT_SELECTIONS: usize = 100;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.5;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("precision of an empty history is undefined")]
    EmptyHistory,
    #[error("recall is undefined when there are no good configurations")]
    NoGoodConfigurations,
    #[error("AUPRC needs a non-empty ranking")]
    EmptyRanking,
    #[error("AUPRC needs at least one successful configuration in the ranking")]
    NoPositives,
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("{strategy} (seed {seed}): {source}")]
    Run {
        strategy: Strategy,
        seed: u64,
        #[source]
        source: SamplerError,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Surrogate(#[from] surrogate::SurrogateError),
}

/// Fraction of evaluated configurations that built.
pub fn precision(history: &[BuildRecord]) -> Result<f64, MetricsError> {
    if history.is_empty() {
        return Err(MetricsError::EmptyHistory);
    }
    Ok(history.iter().filter(|r| r.built).count() as f64 / history.len() as f64)
}

/// Fraction of all good configurations that the history found.
pub fn recall(history: &[BuildRecord], total_good: usize) -> Result<f64, MetricsError> {
    if total_good == 0 {
        return Err(MetricsError::NoGoodConfigurations);
    }
    Ok(history.iter().filter(|r| r.built).count() as f64 / total_good as f64)
}

/// Area under the precision-recall curve of a ranking given best-first.
///
/// Recall only moves at successful items, so the sum of `P(k) * dR(k)` over
/// prefixes reduces to the mean precision at the positions of the
/// successful items.
pub fn auprc(ranked: &[(f64, bool)]) -> Result<f64, MetricsError> {
    auprc_truncated(ranked, 1.0)
}

/// The same sum restricted to prefixes whose recall does not exceed
/// `cutoff`. Not renormalized, so the result is at most `cutoff`.
pub fn auprc_truncated(ranked: &[(f64, bool)], cutoff: f64) -> Result<f64, MetricsError> {
    if ranked.is_empty() {
        return Err(MetricsError::EmptyRanking);
    }
    let total = ranked.iter().filter(|(_, b)| *b).count();
    if total == 0 {
        return Err(MetricsError::NoPositives);
    }
    let mut hits = 0usize;
    let mut area = 0.0;
    for (k, &(_, built)) in ranked.iter().enumerate() {
        if !built {
            continue;
        }
        hits += 1;
        if hits as f64 / total as f64 > cutoff + 1e-12 {
            break;
        }
        area += hits as f64 / (k + 1) as f64;
    }
    Ok(area / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub k: usize,
    pub precision: f64,
    pub recall: Option<f64>,
}

/// Precision (and recall, when `total_good` is known) at every prefix.
pub fn trajectory(history: &[BuildRecord], total_good: Option<usize>) -> Vec<PrPoint> {
    let mut hits = 0usize;
    history
        .iter()
        .enumerate()
        .map(|(i, r)| {
            hits += r.built as usize;
            PrPoint {
                k: i + 1,
                precision: hits as f64 / (i + 1) as f64,
                recall: total_good.filter(|&g| g > 0).map(|g| hits as f64 / g as f64),
            }
        })
        .collect()
}

/// Smallest prefix length whose history contains every good configuration.
pub fn samples_to_full_recall(history: &[BuildRecord], total_good: usize) -> Option<usize> {
    if total_good == 0 {
        return Some(0);
    }
    let mut hits = 0;
    for (i, r) in history.iter().enumerate() {
        hits += r.built as usize;
        if hits == total_good {
            return Some(i + 1);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub bootstrap_size: usize,
    pub smoothing: f64,
    /// Adaptive selections in the train/test protocol.
    pub selections: usize,
    pub train_fraction: f64,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            bootstrap_size: sampler::DEFAULT_BOOTSTRAP,
            smoothing: surrogate::DEFAULT_SMOOTHING,
            selections: DEFAULT_SELECTIONS,
            train_fraction: DEFAULT_TRAIN_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub strategy: Strategy,
    pub sample_sizes: Vec<usize>,
    pub mean_precision: Vec<f64>,
    pub sd_precision: Vec<f64>,
    /// Absent when the dataset has no successful configuration.
    pub mean_recall: Option<Vec<f64>>,
    pub sd_recall: Option<Vec<f64>>,
    pub repetitions: usize,
    pub seeds: Vec<u64>,
    /// Per-repetition precision, `[repetition][size]`.
    pub precision_runs: Vec<Vec<f64>>,
    pub recall_runs: Option<Vec<Vec<f64>>>,
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator); zero for a single value.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 || values.iter().all(|v| *v == values[0]) {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

fn column(runs: &[Vec<f64>], j: usize) -> Vec<f64> {
    runs.iter().map(|r| r[j]).collect()
}

/// Seeds used for each repetition of an experiment.
pub fn repetition_seeds(base_seed: u64, repetitions: usize) -> Vec<u64> {
    (0..repetitions as u64)
        .map(|r| seeding::child_seed(base_seed, "repetition", r))
        .collect()
}

/// Replays every strategy `repetitions` times over the dataset and reports
/// mean and spread of precision and recall at each requested sample size.
/// Repetition `r` uses the same seed for every strategy.
pub fn sweep_experiment(
    dataset: &Dataset,
    strategies: &[Strategy],
    sample_sizes: &[usize],
    repetitions: usize,
    base_seed: u64,
    opts: &ExperimentOptions,
) -> Result<Vec<ExperimentReport>, MetricsError> {
    if sample_sizes.is_empty() || repetitions == 0 || strategies.is_empty() {
        return Err(MetricsError::Invalid(
            "need at least one strategy, sample size and repetition".into(),
        ));
    }
    let max_size = *sample_sizes.iter().max().expect("non-empty");
    if max_size > dataset.len() {
        return Err(MetricsError::InsufficientData(format!(
            "sample size {max_size} exceeds dataset size {}",
            dataset.len()
        )));
    }
    if sample_sizes.contains(&0) {
        return Err(MetricsError::Invalid("sample sizes must be positive".into()));
    }
    let mut sizes = sample_sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();

    let total_good = dataset.good_count();
    let seeds = repetition_seeds(base_seed, repetitions);
    let oracle = DatasetOracle::new(dataset.clone());
    let bootstrap_size = opts.bootstrap_size.min(max_size);

    let jobs: Vec<(Strategy, u64)> = strategies
        .iter()
        .flat_map(|&s| seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let outcomes: Vec<Vec<BuildRecord>> = jobs
        .par_iter()
        .map(|&(strategy, seed)| {
            let cfg = SamplerConfig {
                strategy,
                bootstrap_size,
                budget: max_size - bootstrap_size,
                candidate_mode: CandidateMode::Exhaustive,
                seed,
                smoothing: opts.smoothing,
            };
            sampler::run(&oracle, dataset.graph_arc(), &cfg)
                .map(|out| out.history.records().to_vec())
                .map_err(|source| MetricsError::Run { strategy, seed, source })
        })
        .collect::<Result<_, _>>()?;

    let mut reports = Vec::new();
    for (si, &strategy) in strategies.iter().enumerate() {
        let mut p_runs = Vec::with_capacity(repetitions);
        let mut r_runs = Vec::with_capacity(repetitions);
        for ri in 0..repetitions {
            let history = &outcomes[si * repetitions + ri];
            let traj = trajectory(history, Some(total_good));
            p_runs.push(sizes.iter().map(|&k| traj[k - 1].precision).collect::<Vec<_>>());
            if total_good > 0 {
                r_runs.push(
                    sizes
                        .iter()
                        .map(|&k| traj[k - 1].recall.expect("total_good > 0"))
                        .collect::<Vec<_>>(),
                );
            }
        }
        let agg = |runs: &[Vec<f64>], f: fn(&[f64]) -> f64| -> Vec<f64> {
            (0..sizes.len()).map(|j| f(&column(runs, j))).collect()
        };
        let has_recall = total_good > 0;
        reports.push(ExperimentReport {
            strategy,
            sample_sizes: sizes.clone(),
            mean_precision: agg(&p_runs, mean),
            sd_precision: agg(&p_runs, std_dev),
            mean_recall: has_recall.then(|| agg(&r_runs, mean)),
            sd_recall: has_recall.then(|| agg(&r_runs, std_dev)),
            repetitions,
            seeds: seeds.clone(),
            precision_runs: p_runs,
            recall_runs: has_recall.then_some(r_runs),
        });
    }
    reports.sort_by_key(|r| r.strategy.name());
    Ok(reports)
}

/// `strategy,size,mean_p,sd_p,mean_r,sd_r`, sorted by strategy then size.
pub fn reports_to_csv(reports: &[ExperimentReport]) -> String {
    let mut sorted: Vec<&ExperimentReport> = reports.iter().collect();
    sorted.sort_by_key(|r| r.strategy.name());
    let mut out = String::from("strategy,size,mean_p,sd_p,mean_r,sd_r\n");
    for r in sorted {
        for (j, size) in r.sample_sizes.iter().enumerate() {
            let (mr, sr) = match (&r.mean_recall, &r.sd_recall) {
                (Some(m), Some(s)) => (m[j].to_string(), s[j].to_string()),
                _ => (String::new(), String::new()),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.strategy, size, r.mean_precision[j], r.sd_precision[j], mr, sr
            );
        }
    }
    out
}

/// One scored test configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub digest: ConfigDigest,
    pub score: f64,
    pub built: bool,
}

/// Scores every record with the strategy's model and orders best-first,
/// ties broken by ascending digest. Random strategy scores are uniform draws.
pub fn rank_records<R: Rng + ?Sized>(
    model: &FactorModel,
    strategy: Strategy,
    dataset: &Dataset,
    rng: &mut R,
) -> Vec<RankedItem> {
    let mut items: Vec<RankedItem> = dataset
        .records()
        .iter()
        .zip(dataset.digests())
        .map(|(r, d)| RankedItem {
            digest: *d,
            score: match strategy {
                Strategy::Bayesian => -model.log_ratio(&r.config),
                Strategy::Crowd => model.crowd_log_score(&r.config),
                Strategy::Random => rng.random::<f64>(),
            },
            built: r.built,
        })
        .collect();
    items.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.digest.cmp(&b.digest))
    });
    items
}

/// Train/test protocol: split the dataset, run the adaptive loop on the
/// train side, fit on what was selected, then rank the test side.
pub fn auprc_ranking(
    dataset: &Dataset,
    strategy: Strategy,
    seed: u64,
    opts: &ExperimentOptions,
) -> Result<Vec<RankedItem>, MetricsError> {
    let (train, test) = split_train_test(dataset, opts.train_fraction, &mut seeding::stream(seed, "split"))?;
    let needed = opts.selections + opts.bootstrap_size;
    if train.len() < needed {
        return Err(MetricsError::InsufficientData(format!(
            "train split has {} configurations, need at least {needed}",
            train.len()
        )));
    }
    let cfg = SamplerConfig {
        strategy,
        bootstrap_size: opts.bootstrap_size,
        budget: opts.selections,
        candidate_mode: CandidateMode::Exhaustive,
        seed,
        smoothing: opts.smoothing,
    };
    let graph = std::sync::Arc::clone(train.graph_arc());
    let out = sampler::run(&DatasetOracle::new(train), &graph, &cfg)
        .map_err(|source| MetricsError::Run { strategy, seed, source })?;
    Ok(rank_records(
        &out.model,
        strategy,
        &test,
        &mut seeding::stream(seed, "random-score"),
    ))
}

pub fn auprc_experiment(
    dataset: &Dataset,
    strategy: Strategy,
    seed: u64,
    opts: &ExperimentOptions,
) -> Result<f64, MetricsError> {
    let ranked = auprc_ranking(dataset, strategy, seed, opts)?;
    auprc(&as_pairs(&ranked))
}

pub fn as_pairs(ranked: &[RankedItem]) -> Vec<(f64, bool)> {
    ranked.iter().map(|r| (r.score, r.built)).collect()
}
