//! Paired good/bad factorized densities over a dependency graph.
//!
//! Each side is a product of one categorical factor per package and one
//! joint factor per dependency edge, estimated from smoothed counts. The
//! Bayesian score is expected improvement,
//! `EI(x) = 1 / (alpha + (P_bad(x) / P_good(x)) * (1 - alpha))`,
//! and the crowd score is the product of per-package version frequencies
//! among successful builds.
//!
//! All density arithmetic stays in natural-log space.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configspace::{Configuration, DependencyGraph, GraphError, GraphFile};
use crate::dataset::BuildRecord;

/// Bound on `ln(P_bad / P_good)` before exponentiation.
pub const LOG_RATIO_CLAMP: f64 = 700.0;

pub const DEFAULT_SMOOTHING: f64 = 1.0;

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("smoothing pseudo-count must be positive and finite, got {0}")]
    BadSmoothing(f64),
    #[error("crowd floor must lie in [0, 1], got {0}")]
    BadFloor(f64),
    #[error("factor shape mismatch: {0}")]
    Shape(String),
    #[error("factor weight must be positive and finite: {0}")]
    NonPositive(String),
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Raw occurrence counts for one side (good or bad) of the history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorCounts {
    pub records: u64,
    pub node: Vec<Vec<u64>>,
    /// Row-major `m_parent x m_child` per edge.
    pub edge: Vec<Vec<u64>>,
}

impl FactorCounts {
    pub fn zeros(graph: &DependencyGraph) -> Self {
        Self {
            records: 0,
            node: (0..graph.len()).map(|i| vec![0; graph.domain_size(i)]).collect(),
            edge: graph
                .edges()
                .iter()
                .map(|&(p, c)| vec![0; graph.domain_size(p) * graph.domain_size(c)])
                .collect(),
        }
    }

    pub fn add(&mut self, graph: &DependencyGraph, config: &Configuration) {
        self.records += 1;
        for (i, counts) in self.node.iter_mut().enumerate() {
            counts[config.version(i)] += 1;
        }
        for (e, &(p, c)) in graph.edges().iter().enumerate() {
            let cell = config.version(p) * graph.domain_size(c) + config.version(c);
            self.edge[e][cell] += 1;
        }
    }

    fn check_shape(&self, graph: &DependencyGraph) -> Result<(), SurrogateError> {
        let expected = Self::zeros(graph);
        let same = self.node.len() == expected.node.len()
            && self.edge.len() == expected.edge.len()
            && self.node.iter().zip(&expected.node).all(|(a, b)| a.len() == b.len())
            && self.edge.iter().zip(&expected.edge).all(|(a, b)| a.len() == b.len());
        if !same {
            return Err(SurrogateError::Shape("counts do not match graph domains".into()));
        }
        let totals_ok = self.node.iter().all(|v| v.iter().sum::<u64>() == self.records)
            && self.edge.iter().all(|v| v.iter().sum::<u64>() == self.records);
        if !totals_ok {
            return Err(SurrogateError::Shape("factor counts disagree with record count".into()));
        }
        Ok(())
    }
}

/// Factor weights for one side, with cached logarithms.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorTable {
    node: Vec<Vec<f64>>,
    edge: Vec<Vec<f64>>,
    node_log: Vec<Vec<f64>>,
    edge_log: Vec<Vec<f64>>,
    smoothing: f64,
}

fn smoothed(counts: &[u64], records: u64, smoothing: f64) -> Vec<f64> {
    let denom = records as f64 + smoothing * counts.len() as f64;
    counts.iter().map(|&c| (c as f64 + smoothing) / denom).collect()
}

fn logs(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.iter().map(|w| w.ln()).collect()).collect()
}

impl FactorTable {
    /// Normalized empirical frequencies with `smoothing` added to every cell.
    pub fn from_counts(counts: &FactorCounts, smoothing: f64) -> Self {
        let node: Vec<Vec<f64>> = counts
            .node
            .iter()
            .map(|c| smoothed(c, counts.records, smoothing))
            .collect();
        let edge: Vec<Vec<f64>> = counts
            .edge
            .iter()
            .map(|c| smoothed(c, counts.records, smoothing))
            .collect();
        Self {
            node_log: logs(&node),
            edge_log: logs(&edge),
            node,
            edge,
            smoothing,
        }
    }

    /// Hand-specified positive weights; they need not be normalized.
    pub fn from_weights(
        graph: &DependencyGraph,
        node: Vec<Vec<f64>>,
        edge: Vec<Vec<f64>>,
    ) -> Result<Self, SurrogateError> {
        let shape = FactorCounts::zeros(graph);
        if node.len() != shape.node.len()
            || edge.len() != shape.edge.len()
            || node.iter().zip(&shape.node).any(|(a, b)| a.len() != b.len())
            || edge.iter().zip(&shape.edge).any(|(a, b)| a.len() != b.len())
        {
            return Err(SurrogateError::Shape("weights do not match graph domains".into()));
        }
        if let Some(w) = node.iter().chain(&edge).flatten().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(SurrogateError::NonPositive(w.to_string()));
        }
        Ok(Self {
            node_log: logs(&node),
            edge_log: logs(&edge),
            node,
            edge,
            smoothing: 0.0,
        })
    }

    pub fn node_factor(&self, package: usize) -> &[f64] {
        &self.node[package]
    }

    /// Row-major `m_parent x m_child` weights for edge `edge`.
    pub fn edge_factor(&self, edge: usize) -> &[f64] {
        &self.edge[edge]
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// `sum_i ln F_i(x_i) + sum_(j,k) ln F_jk(x_j, x_k)`.
    pub fn log_density(&self, graph: &DependencyGraph, config: &Configuration) -> f64 {
        let mut total = 0.0;
        for (i, logs) in self.node_log.iter().enumerate() {
            total += logs[config.version(i)];
        }
        for (e, &(p, c)) in graph.edges().iter().enumerate() {
            total += self.edge_log[e][config.version(p) * graph.domain_size(c) + config.version(c)];
        }
        total
    }
}

pub fn log_density(graph: &DependencyGraph, table: &FactorTable, config: &Configuration) -> f64 {
    table.log_density(graph, config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreKind {
    ExpectedImprovement,
    Crowd,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub kind: ScoreKind,
}

/// `1 / (alpha + r (1 - alpha))` where `ln r = log_ratio`, clamped.
pub fn ei_from_log_ratio(alpha: f64, log_ratio: f64) -> f64 {
    let r = log_ratio.clamp(-LOG_RATIO_CLAMP, LOG_RATIO_CLAMP).exp();
    1.0 / (alpha + r * (1.0 - alpha))
}

/// Expected improvement from explicit tables and prior.
pub fn ei_from_tables(
    graph: &DependencyGraph,
    good: &FactorTable,
    bad: &FactorTable,
    alpha: f64,
    config: &Configuration,
) -> f64 {
    let log_ratio = bad.log_density(graph, config) - good.log_density(graph, config);
    ei_from_log_ratio(alpha, log_ratio)
}

/// Fitted good/bad factor tables plus the success prior.
#[derive(Debug, Clone)]
pub struct FactorModel {
    graph: Arc<DependencyGraph>,
    smoothing: f64,
    crowd_floor: f64,
    good_counts: FactorCounts,
    bad_counts: FactorCounts,
    good: FactorTable,
    bad: FactorTable,
    alpha: f64,
}

/// Fits both sides from a history. An empty history yields uniform factors
/// and `alpha = 1/2`.
pub fn fit<'a>(
    history: impl IntoIterator<Item = &'a BuildRecord>,
    graph: Arc<DependencyGraph>,
    smoothing: f64,
) -> Result<FactorModel, SurrogateError> {
    if !(smoothing.is_finite() && smoothing > 0.0) {
        return Err(SurrogateError::BadSmoothing(smoothing));
    }
    let mut good = FactorCounts::zeros(&graph);
    let mut bad = FactorCounts::zeros(&graph);
    for r in history {
        if r.built {
            good.add(&graph, &r.config);
        } else {
            bad.add(&graph, &r.config);
        }
    }
    Ok(FactorModel::from_counts(graph, good, bad, smoothing))
}

fn laplace_prior(n_good: u64, n_bad: u64) -> f64 {
    (n_good as f64 + 1.0) / ((n_good + n_bad) as f64 + 2.0)
}

impl FactorModel {
    fn from_counts(graph: Arc<DependencyGraph>, good: FactorCounts, bad: FactorCounts, smoothing: f64) -> Self {
        Self {
            good: FactorTable::from_counts(&good, smoothing),
            bad: FactorTable::from_counts(&bad, smoothing),
            alpha: laplace_prior(good.records, bad.records),
            graph,
            smoothing,
            crowd_floor: 0.0,
            good_counts: good,
            bad_counts: bad,
        }
    }

    pub fn with_crowd_floor(mut self, floor: f64) -> Result<Self, SurrogateError> {
        if !(0.0..=1.0).contains(&floor) {
            return Err(SurrogateError::BadFloor(floor));
        }
        self.crowd_floor = floor;
        Ok(self)
    }

    pub fn graph(&self) -> &DependencyGraph {
        &self.graph
    }

    pub fn graph_arc(&self) -> &Arc<DependencyGraph> {
        &self.graph
    }

    pub fn good(&self) -> &FactorTable {
        &self.good
    }

    pub fn bad(&self) -> &FactorTable {
        &self.bad
    }

    pub fn good_counts(&self) -> &FactorCounts {
        &self.good_counts
    }

    pub fn bad_counts(&self) -> &FactorCounts {
        &self.bad_counts
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_good(&self) -> u64 {
        self.good_counts.records
    }

    pub fn n_bad(&self) -> u64 {
        self.bad_counts.records
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn crowd_floor(&self) -> f64 {
        self.crowd_floor
    }

    /// `ln P_bad(x) - ln P_good(x)`, unclamped.
    pub fn log_ratio(&self, config: &Configuration) -> f64 {
        self.bad.log_density(&self.graph, config) - self.good.log_density(&self.graph, config)
    }

    pub fn expected_improvement(&self, config: &Configuration) -> Score {
        Score {
            value: ei_from_log_ratio(self.alpha, self.log_ratio(config)),
            kind: ScoreKind::ExpectedImprovement,
        }
    }

    /// Log of the crowd score; `-inf` when some version was never seen in a
    /// good record and the floor is zero.
    pub fn crowd_log_score(&self, config: &Configuration) -> f64 {
        let n = self.good_counts.records;
        if n == 0 {
            return if self.crowd_floor > 0.0 {
                self.crowd_floor.ln() * self.graph.len() as f64
            } else {
                f64::NEG_INFINITY
            };
        }
        self.good_counts
            .node
            .iter()
            .enumerate()
            .map(|(i, counts)| {
                let freq = counts[config.version(i)] as f64 / n as f64;
                freq.max(self.crowd_floor).ln()
            })
            .sum()
    }

    pub fn crowd_score(&self, config: &Configuration) -> Score {
        Score {
            value: self.crowd_log_score(config).exp(),
            kind: ScoreKind::Crowd,
        }
    }

    /// Adds one record; identical to refitting on the extended history.
    pub fn refit_incremental(&self, record: &BuildRecord) -> FactorModel {
        let mut next = self.clone();
        if record.built {
            next.good_counts.add(&self.graph, &record.config);
            next.good = FactorTable::from_counts(&next.good_counts, self.smoothing);
        } else {
            next.bad_counts.add(&self.graph, &record.config);
            next.bad = FactorTable::from_counts(&next.bad_counts, self.smoothing);
        }
        next.alpha = laplace_prior(next.good_counts.records, next.bad_counts.records);
        next
    }

    pub fn to_file_repr(&self) -> ModelFile {
        let side = |counts: &FactorCounts, table: &FactorTable| SideFile {
            counts: counts.clone(),
            node_factors: table.node.clone(),
            edge_factors: table.edge.clone(),
        };
        ModelFile {
            graph: self.graph.to_file_repr(),
            smoothing: self.smoothing,
            crowd_floor: self.crowd_floor,
            alpha: self.alpha,
            n_good: self.n_good(),
            n_bad: self.n_bad(),
            good: side(&self.good_counts, &self.good),
            bad: side(&self.bad_counts, &self.bad),
        }
    }

    /// Rebuilds a model from its file form. Tables are recomputed from the
    /// stored counts.
    pub fn from_file_repr(file: ModelFile) -> Result<Self, SurrogateError> {
        if !(file.smoothing.is_finite() && file.smoothing > 0.0) {
            return Err(SurrogateError::BadSmoothing(file.smoothing));
        }
        let graph = Arc::new(DependencyGraph::from_file_repr(file.graph)?);
        file.good.counts.check_shape(&graph)?;
        file.bad.counts.check_shape(&graph)?;
        if file.good.counts.records != file.n_good || file.bad.counts.records != file.n_bad {
            return Err(SurrogateError::Shape("n_good/n_bad disagree with counts".into()));
        }
        Self::from_counts(graph, file.good.counts, file.bad.counts, file.smoothing)
            .with_crowd_floor(file.crowd_floor)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file_repr()).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SurrogateError> {
        Self::from_file_repr(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_json() + "\n")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SurrogateError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

pub fn expected_improvement(model: &FactorModel, config: &Configuration) -> Score {
    model.expected_improvement(config)
}

pub fn crowd_score(model: &FactorModel, config: &Configuration) -> Score {
    model.crowd_score(config)
}

pub fn refit_incremental(model: &FactorModel, record: &BuildRecord) -> FactorModel {
    model.refit_incremental(record)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SideFile {
    pub counts: FactorCounts,
    pub node_factors: Vec<Vec<f64>>,
    pub edge_factors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub graph: GraphFile,
    pub smoothing: f64,
    pub crowd_floor: f64,
    pub alpha: f64,
    pub n_good: u64,
    pub n_bad: u64,
    pub good: SideFile,
    pub bad: SideFile,
}
