//! Farmer-worker build simulation over a deduplicated build DAG, and
//! synthetic ground-truth oracles with planted pairwise incompatibilities.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::configspace::{digest, ConfigDigest, Configuration, DependencyGraph, GraphDraft, Package};
use crate::dataset::{BuildRecord, Dataset, DatasetError};
use crate::sampler::{BuildOracle, OracleError, MAX_EXHAUSTIVE};
use crate::seeding;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("rule references unknown package {0:?}")]
    UnknownPackage(String),
    #[error("rule references unknown version {version:?} of {package}")]
    UnknownVersion { package: String, version: String },
    #[error("rule pair {parent} -> {child} is not a dependency edge")]
    NotAnEdge { parent: String, child: String },
    #[error("noise probability must lie in [0, 1], got {0}")]
    BadNoise(f64),
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("latency must be finite and non-negative, got {0}")]
    BadLatency(f64),
    #[error("space too large to enumerate ({0} configurations)")]
    SpaceTooLarge(String),
    #[error("invalid benchmark spec: {0}")]
    BadSpec(String),
    #[error("could not reach success rate {target} within {attempts} attempts")]
    Infeasible { target: f64, attempts: usize },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed rules file: {0}")]
    Json(#[from] serde_json::Error),
}

// ---------------------------------------------------------------------------
// Planted rules and the synthetic oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ForbiddenPair {
    pub parent: String,
    pub parent_version: String,
    pub child: String,
    pub child_version: String,
}

/// On-disk rules: forbidden version pairs across edges plus a spontaneous
/// failure probability.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PlantedRuleSet {
    pub forbidden: Vec<ForbiddenPair>,
    #[serde(default)]
    pub noise: f64,
}

impl PlantedRuleSet {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rules serialize")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_json() + "\n")
    }
}

/// A rule resolved to `(parent, parent_version, child, child_version)` indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct IndexedRule {
    parent: usize,
    parent_version: usize,
    child: usize,
    child_version: usize,
}

impl IndexedRule {
    fn active(&self, config: &Configuration) -> bool {
        config.version(self.parent) == self.parent_version && config.version(self.child) == self.child_version
    }
}

fn resolve_rules(graph: &DependencyGraph, rules: &PlantedRuleSet) -> Result<Vec<IndexedRule>, SimError> {
    if !(0.0..=1.0).contains(&rules.noise) {
        return Err(SimError::BadNoise(rules.noise));
    }
    rules
        .forbidden
        .iter()
        .map(|r| {
            let pkg = |name: &str| graph.package_index(name).ok_or_else(|| SimError::UnknownPackage(name.to_string()));
            let ver = |p: usize, v: &str| {
                graph.version_index(p, v).ok_or_else(|| SimError::UnknownVersion {
                    package: graph.name(p).to_string(),
                    version: v.to_string(),
                })
            };
            let parent = pkg(&r.parent)?;
            let child = pkg(&r.child)?;
            if graph.edge_index(parent, child).is_none() {
                return Err(SimError::NotAnEdge {
                    parent: r.parent.clone(),
                    child: r.child.clone(),
                });
            }
            Ok(IndexedRule {
                parent,
                parent_version: ver(parent, &r.parent_version)?,
                child,
                child_version: ver(child, &r.child_version)?,
            })
        })
        .collect()
}

/// Ground truth: a configuration builds iff no forbidden pair is active and
/// it does not draw a (deterministic, per-configuration) noise failure.
#[derive(Debug, Clone)]
pub struct SyntheticOracle {
    graph: Arc<DependencyGraph>,
    rules: Vec<IndexedRule>,
    noise: f64,
    seed: u64,
}

impl SyntheticOracle {
    pub fn new(graph: Arc<DependencyGraph>, rules: &PlantedRuleSet, seed: u64) -> Result<Self, SimError> {
        Ok(Self {
            rules: resolve_rules(&graph, rules)?,
            noise: rules.noise,
            graph,
            seed,
        })
    }

    pub fn graph(&self) -> &Arc<DependencyGraph> {
        &self.graph
    }

    pub fn outcome(&self, config: &Configuration) -> bool {
        if self.rules.iter().any(|r| r.active(config)) {
            return false;
        }
        if self.noise > 0.0 {
            let mut h = Sha256::new();
            h.update(self.seed.to_le_bytes());
            h.update(digest(&self.graph, config).as_bytes());
            let bytes: [u8; 32] = h.finalize().into();
            let u = u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes")) >> 11;
            return (u as f64) / ((1u64 << 53) as f64) >= self.noise;
        }
        true
    }

    fn enumerable(&self) -> Result<(), SimError> {
        match self.graph.space_size_u64() {
            Some(n) if n <= MAX_EXHAUSTIVE => Ok(()),
            _ => Err(SimError::SpaceTooLarge(self.graph.space_size().to_string())),
        }
    }

    /// Every configuration that builds, by brute force.
    pub fn good_configurations(&self) -> Result<Vec<Configuration>, SimError> {
        self.enumerable()?;
        Ok(self.graph.configurations().filter(|c| self.outcome(c)).collect())
    }

    pub fn success_rate(&self) -> Result<f64, SimError> {
        self.enumerable()?;
        let total = self.graph.space_size_u64().expect("checked") as f64;
        Ok(self.good_configurations()?.len() as f64 / total)
    }

    /// The whole space labeled by this oracle.
    pub fn enumerate_dataset(&self) -> Result<Dataset, SimError> {
        self.enumerable()?;
        let records = self
            .graph
            .configurations()
            .map(|c| {
                let built = self.outcome(&c);
                BuildRecord::new(c, built)
            })
            .collect::<Vec<_>>();
        Ok(Dataset::new(Arc::clone(&self.graph), records)?)
    }

    /// Own-build outcome of a DAG unit: it fails when its version pairs with a
    /// direct dependency's version in a forbidden rule.
    pub fn unit_outcome(&self, dag: &BuildDag, unit: &BuildUnit) -> bool {
        !unit.deps.iter().any(|&d| {
            let dep = &dag.units[d];
            self.rules.iter().any(|r| {
                r.parent == unit.package
                    && r.parent_version == unit.version
                    && r.child == dep.package
                    && r.child_version == dep.version
            })
        })
    }
}

impl BuildOracle for SyntheticOracle {
    fn evaluate(&self, config: &Configuration) -> Result<bool, OracleError> {
        Ok(self.outcome(config))
    }
}

// ---------------------------------------------------------------------------
// Benchmark generation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainSizes {
    /// One size per package, root first.
    Fixed(Vec<usize>),
    /// Each package draws its size uniformly from `min..=max`.
    Range { min: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub packages: usize,
    pub domain_sizes: DomainSizes,
    /// Fraction of edges allowed to carry forbidden pairs, in (0, 1].
    pub rule_density: f64,
    pub target_success_rate: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self {
            packages: 8,
            domain_sizes: DomainSizes::Range { min: 2, max: 4 },
            rule_density: 0.5,
            target_success_rate: 0.1,
            noise: 0.0,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub graph: Arc<DependencyGraph>,
    pub rules: PlantedRuleSet,
}

/// Relative tolerance on the achieved success rate.
pub const RATE_TOLERANCE: f64 = 0.2;
const GRAPH_ATTEMPTS: usize = 50;

/// Random rooted tree: package `i > 0` depends from a uniformly chosen
/// earlier package. Names are `pkg0` (root), `pkg1`, ...
pub fn random_tree_graph<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> DependencyGraph {
    let packages: Vec<Package> = sizes
        .iter()
        .enumerate()
        .map(|(i, &m)| Package::new(format!("pkg{i}"), (0..m).map(|v| format!("1.{v}"))))
        .collect();
    let edges = (1..sizes.len()).map(|i| (rng.random_range(0..i), i)).collect();
    GraphDraft {
        packages,
        edges,
        root: 0,
    }
    .validate()
    .expect("random trees are valid")
}

fn draw_sizes<R: Rng + ?Sized>(spec: &BenchmarkSpec, rng: &mut R) -> Result<Vec<usize>, SimError> {
    match &spec.domain_sizes {
        DomainSizes::Fixed(sizes) => {
            if sizes.len() != spec.packages {
                return Err(SimError::BadSpec(format!(
                    "{} domain sizes for {} packages",
                    sizes.len(),
                    spec.packages
                )));
            }
            Ok(sizes.clone())
        }
        DomainSizes::Range { min, max } => {
            if *min == 0 || min > max {
                return Err(SimError::BadSpec(format!("bad domain size range {min}..={max}")));
            }
            Ok((0..spec.packages).map(|_| rng.random_range(*min..=*max)).collect())
        }
    }
}

/// Generates a random tree-shaped graph and plants forbidden pairs until the
/// brute-force success rate lies within 20% (relative) of the target.
pub fn generate_benchmark(spec: &BenchmarkSpec) -> Result<Benchmark, SimError> {
    if spec.packages == 0 {
        return Err(SimError::BadSpec("need at least one package".into()));
    }
    if !(spec.target_success_rate > 0.0 && spec.target_success_rate <= 1.0) {
        return Err(SimError::BadSpec(format!(
            "target success rate {} outside (0, 1]",
            spec.target_success_rate
        )));
    }
    if !(spec.rule_density > 0.0 && spec.rule_density <= 1.0) {
        return Err(SimError::BadSpec(format!("rule density {} outside (0, 1]", spec.rule_density)));
    }
    if !(0.0..=1.0).contains(&spec.noise) {
        return Err(SimError::BadNoise(spec.noise));
    }
    let mut rng = seeding::stream(spec.seed, "benchmark");
    let lo = spec.target_success_rate * (1.0 - RATE_TOLERANCE);
    let hi = spec.target_success_rate * (1.0 + RATE_TOLERANCE);

    for _ in 0..GRAPH_ATTEMPTS {
        let sizes = draw_sizes(spec, &mut rng)?;
        let graph = Arc::new(random_tree_graph(&sizes, &mut rng));
        if spec.target_success_rate >= 1.0 || graph.edges().is_empty() {
            if spec.target_success_rate >= 1.0 {
                return Ok(Benchmark {
                    graph,
                    rules: PlantedRuleSet {
                        forbidden: Vec::new(),
                        noise: spec.noise,
                    },
                });
            }
            continue;
        }
        let total = match graph.space_size_u64() {
            Some(n) if n <= MAX_EXHAUSTIVE => n as usize,
            _ => return Err(SimError::SpaceTooLarge(graph.space_size().to_string())),
        };
        if let Some(rules) = plant_rules(&graph, spec.rule_density, total, lo, hi, &mut rng) {
            let forbidden = rules
                .into_iter()
                .map(|r| ForbiddenPair {
                    parent: graph.name(r.parent).to_string(),
                    parent_version: graph.versions(r.parent)[r.parent_version].clone(),
                    child: graph.name(r.child).to_string(),
                    child_version: graph.versions(r.child)[r.child_version].clone(),
                })
                .collect();
            return Ok(Benchmark {
                graph,
                rules: PlantedRuleSet {
                    forbidden,
                    noise: spec.noise,
                },
            });
        }
    }
    Err(SimError::Infeasible {
        target: spec.target_success_rate,
        attempts: GRAPH_ATTEMPTS,
    })
}

fn plant_rules<R: Rng + ?Sized>(
    graph: &DependencyGraph,
    density: f64,
    total: usize,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Option<Vec<IndexedRule>> {
    let configs: Vec<Configuration> = graph.configurations().collect();
    let mut good = vec![true; total];
    let mut good_count = total;

    let mut edges: Vec<(usize, usize)> = graph.edges().to_vec();
    edges.shuffle(rng);
    let eligible = ((density * edges.len() as f64).ceil() as usize).clamp(1, edges.len());
    let mut pool: Vec<IndexedRule> = edges[..eligible]
        .iter()
        .flat_map(|&(p, c)| {
            (0..graph.domain_size(p)).flat_map(move |u| {
                (0..graph.domain_size(c)).map(move |w| IndexedRule {
                    parent: p,
                    parent_version: u,
                    child: c,
                    child_version: w,
                })
            })
        })
        .collect();
    pool.shuffle(rng);

    let mut chosen = Vec::new();
    for rule in pool {
        if (good_count as f64) <= hi * total as f64 {
            break;
        }
        let hits: Vec<usize> = (0..total).filter(|&i| good[i] && rule.active(&configs[i])).collect();
        if hits.is_empty() || ((good_count - hits.len()) as f64) < lo * total as f64 {
            continue;
        }
        good_count -= hits.len();
        for i in hits {
            good[i] = false;
        }
        chosen.push(rule);
    }
    let rate = good_count as f64 / total as f64;
    (rate >= lo && rate <= hi).then_some(chosen)
}

// ---------------------------------------------------------------------------
// Build DAG
// ---------------------------------------------------------------------------

/// One installable unit: a package at a version over a specific dependency
/// subtree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildUnit {
    pub package: usize,
    pub version: usize,
    pub digest: ConfigDigest,
    /// Units this one depends on.
    pub deps: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct BuildDag {
    graph: Arc<DependencyGraph>,
    units: Vec<BuildUnit>,
    dependents: Vec<Vec<usize>>,
    origin: Vec<usize>,
}

fn unit_digest(graph: &DependencyGraph, package: usize, version: usize, deps: &mut [ConfigDigest]) -> ConfigDigest {
    deps.sort_unstable();
    let mut h = Sha256::new();
    h.update(b"buildtune.unit.v1");
    for field in [graph.name(package).as_bytes(), graph.versions(package)[version].as_bytes()] {
        h.update((field.len() as u64).to_le_bytes());
        h.update(field);
    }
    h.update((deps.len() as u64).to_le_bytes());
    for d in deps.iter() {
        h.update(d.as_bytes());
    }
    ConfigDigest::from_bytes(h.finalize().into())
}

/// Merges the build trees of all configurations, sharing identical subtrees.
pub fn build_dag(graph: Arc<DependencyGraph>, configs: &[Configuration]) -> BuildDag {
    let mut units: Vec<BuildUnit> = Vec::new();
    let mut by_digest: HashMap<ConfigDigest, usize> = HashMap::new();
    let mut origin = Vec::with_capacity(configs.len());
    let order: Vec<usize> = graph.topological_order().iter().rev().copied().collect();

    for config in configs {
        let mut unit_of = vec![usize::MAX; graph.len()];
        for &pkg in &order {
            let deps: Vec<usize> = graph.children(pkg).iter().map(|&c| unit_of[c]).collect();
            let mut dep_digests: Vec<ConfigDigest> = deps.iter().map(|&u| units[u].digest).collect();
            let d = unit_digest(&graph, pkg, config.version(pkg), &mut dep_digests);
            let id = *by_digest.entry(d).or_insert_with(|| {
                units.push(BuildUnit {
                    package: pkg,
                    version: config.version(pkg),
                    digest: d,
                    deps,
                });
                units.len() - 1
            });
            unit_of[pkg] = id;
        }
        origin.push(unit_of[graph.root()]);
    }

    let mut dependents = vec![Vec::new(); units.len()];
    for (u, unit) in units.iter().enumerate() {
        for &d in &unit.deps {
            dependents[d].push(u);
        }
    }
    BuildDag {
        graph,
        units,
        dependents,
        origin,
    }
}

impl BuildDag {
    pub fn units(&self) -> &[BuildUnit] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn dependents(&self, unit: usize) -> &[usize] {
        &self.dependents[unit]
    }

    /// Root unit of each input configuration.
    pub fn origin(&self) -> &[usize] {
        &self.origin
    }

    pub fn graph(&self) -> &DependencyGraph {
        &self.graph
    }

    pub fn edge_count(&self) -> usize {
        self.units.iter().map(|u| u.deps.len()).sum()
    }

    /// Every unit that transitively depends on `unit`.
    pub fn transitive_dependents(&self, unit: usize) -> HashSet<usize> {
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([unit]);
        while let Some(u) = queue.pop_front() {
            for &d in &self.dependents[u] {
                if seen.insert(d) {
                    queue.push_back(d);
                }
            }
        }
        seen
    }
}

// ---------------------------------------------------------------------------
// Farmer-worker simulation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeStatus {
    Pending,
    Ready,
    Building,
    Succeeded,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Start,
    Finish,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub time: f64,
    pub unit: usize,
    pub kind: EventKind,
    /// Set on finish events.
    pub success: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitReport {
    pub package: String,
    pub version: String,
    pub digest: ConfigDigest,
    pub status: NodeStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub unique: usize,
    pub attempted: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub skipped: usize,
    /// Own failures plus propagated skips.
    pub marked_failed: usize,
    pub workers: usize,
    pub makespan: f64,
    pub units: Vec<UnitReport>,
    pub events: Vec<SimEvent>,
}

impl SimReport {
    pub fn status(&self, unit: usize) -> NodeStatus {
        self.units[unit].status
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LatencyModel {
    Unit,
    /// Deterministic per unit digest.
    LogNormal { mu: f64, sigma: f64, seed: u64 },
}

impl LatencyModel {
    pub fn latency(&self, unit: &BuildUnit) -> f64 {
        match *self {
            LatencyModel::Unit => 1.0,
            LatencyModel::LogNormal { mu, sigma, seed } => {
                let mut s = [0u8; 32];
                let mut h = Sha256::new();
                h.update(seed.to_le_bytes());
                h.update(unit.digest.as_bytes());
                s.copy_from_slice(&h.finalize());
                let dist = LogNormal::new(mu, sigma).expect("valid log-normal parameters");
                dist.sample(&mut ChaCha8Rng::from_seed(s))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Finish {
    time: f64,
    digest: ConfigDigest,
    unit: usize,
}

impl Eq for Finish {}

impl Ord for Finish {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then_with(|| self.digest.cmp(&other.digest))
    }
}

impl PartialOrd for Finish {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Discrete-event farmer-worker loop. The farmer keeps a FIFO ready queue
/// (units that become ready together are queued in digest order) and hands
/// work to idle workers; a failure marks every transitive dependent skipped.
pub fn simulate(
    dag: &BuildDag,
    outcome: impl Fn(usize, &BuildUnit) -> bool,
    workers: usize,
    latency: impl Fn(usize, &BuildUnit) -> f64,
) -> Result<SimReport, SimError> {
    if workers == 0 {
        return Err(SimError::NoWorkers);
    }
    let n = dag.len();
    let mut status = vec![NodeStatus::Pending; n];
    let mut waiting: Vec<usize> = dag.units.iter().map(|u| u.deps.len()).collect();
    let mut ready: VecDeque<usize> = VecDeque::new();
    let mut running: BinaryHeap<Reverse<Finish>> = BinaryHeap::new();
    let mut events = Vec::new();
    let mut now = 0.0f64;

    let mut initial: Vec<usize> = (0..n).filter(|&u| waiting[u] == 0).collect();
    initial.sort_by_key(|&u| dag.units[u].digest);
    for u in initial {
        status[u] = NodeStatus::Ready;
        ready.push_back(u);
    }

    loop {
        while running.len() < workers {
            let Some(u) = ready.pop_front() else { break };
            let lat = latency(u, &dag.units[u]);
            if !(lat.is_finite() && lat >= 0.0) {
                return Err(SimError::BadLatency(lat));
            }
            status[u] = NodeStatus::Building;
            events.push(SimEvent {
                time: now,
                unit: u,
                kind: EventKind::Start,
                success: None,
            });
            running.push(Reverse(Finish {
                time: now + lat,
                digest: dag.units[u].digest,
                unit: u,
            }));
        }
        let Some(Reverse(first)) = running.pop() else { break };
        now = first.time;
        let mut finished = vec![first];
        while let Some(Reverse(next)) = running.peek() {
            if next.time != now {
                break;
            }
            finished.push(*next);
            running.pop();
        }

        let mut newly_ready = Vec::new();
        for f in finished {
            let ok = outcome(f.unit, &dag.units[f.unit]);
            events.push(SimEvent {
                time: now,
                unit: f.unit,
                kind: EventKind::Finish,
                success: Some(ok),
            });
            if ok {
                status[f.unit] = NodeStatus::Succeeded;
                for &d in &dag.dependents[f.unit] {
                    waiting[d] -= 1;
                    if waiting[d] == 0 && status[d] == NodeStatus::Pending {
                        newly_ready.push(d);
                    }
                }
            } else {
                status[f.unit] = NodeStatus::Failed;
                for d in dag.transitive_dependents(f.unit) {
                    if status[d] == NodeStatus::Pending {
                        status[d] = NodeStatus::Skipped;
                    }
                }
            }
        }
        newly_ready.retain(|&u| status[u] == NodeStatus::Pending);
        newly_ready.sort_by_key(|&u| dag.units[u].digest);
        for u in newly_ready {
            status[u] = NodeStatus::Ready;
            ready.push_back(u);
        }
    }

    let count = |s: NodeStatus| status.iter().filter(|&&x| x == s).count();
    let (succeeded, failed, skipped) = (
        count(NodeStatus::Succeeded),
        count(NodeStatus::Failed),
        count(NodeStatus::Skipped),
    );
    debug_assert_eq!(succeeded + failed + skipped, n, "every unit must reach a final state");
    let g = &dag.graph;
    Ok(SimReport {
        unique: n,
        attempted: succeeded + failed,
        succeeded,
        failed,
        skipped,
        marked_failed: failed + skipped,
        workers,
        makespan: now,
        units: dag
            .units
            .iter()
            .zip(&status)
            .map(|(u, &s)| UnitReport {
                package: g.name(u.package).to_string(),
                version: g.versions(u.package)[u.version].clone(),
                digest: u.digest,
                status: s,
            })
            .collect(),
        events,
    })
}

/// Whether each input configuration's root unit built.
pub fn configuration_outcomes(dag: &BuildDag, report: &SimReport) -> Vec<bool> {
    dag.origin
        .iter()
        .map(|&u| report.units[u].status == NodeStatus::Succeeded)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain3() -> Arc<DependencyGraph> {
        Arc::new(
            DependencyGraph::new(
                "a",
                vec![
                    Package::new("a", ["v1", "v2"]),
                    Package::new("b", ["v1", "v2"]),
                    Package::new("c", ["v1", "v2"]),
                ],
                &[("a", "b"), ("b", "c")],
            )
            .unwrap(),
        )
    }

    fn diamond() -> Arc<DependencyGraph> {
        Arc::new(
            DependencyGraph::new(
                "top",
                vec![
                    Package::new("top", ["1"]),
                    Package::new("left", ["1"]),
                    Package::new("right", ["1"]),
                    Package::new("base", ["1"]),
                ],
                &[("top", "left"), ("top", "right"), ("left", "base"), ("right", "base")],
            )
            .unwrap(),
        )
    }

    fn cfg(g: &DependencyGraph, a: Vec<u32>) -> Configuration {
        Configuration::new(g, a).unwrap()
    }

    fn unit_latency(_: usize, _: &BuildUnit) -> f64 {
        1.0
    }

    #[test]
    fn identical_configurations_share_everything() {
        let g = chain3();
        let dag = build_dag(Arc::clone(&g), &[cfg(&g, vec![0, 1, 0]), cfg(&g, vec![0, 1, 0])]);
        assert_eq!(dag.len(), 3);
        assert_eq!(dag.origin()[0], dag.origin()[1]);
    }

    #[test]
    fn root_version_change_shares_dependencies() {
        let g = chain3();
        let dag = build_dag(Arc::clone(&g), &[cfg(&g, vec![0, 1, 0]), cfg(&g, vec![1, 1, 0])]);
        assert_eq!(dag.len(), 4);
        // a leaf change forces new units all the way up
        let dag = build_dag(Arc::clone(&g), &[cfg(&g, vec![0, 1, 0]), cfg(&g, vec![0, 1, 1])]);
        assert_eq!(dag.len(), 6);
    }

    #[test]
    fn failure_propagates_up_a_chain() {
        let g = chain3();
        let dag = build_dag(Arc::clone(&g), &[cfg(&g, vec![0, 0, 0])]);
        let leaf = dag.units().iter().position(|u| u.package == 2).unwrap();
        let report = simulate(&dag, |u, _| u != leaf, 2, unit_latency).unwrap();
        assert_eq!(report.attempted, 1);
        assert_eq!(report.failed, 1);
        assert_eq!(report.skipped, 2);
        assert_eq!(report.attempted + report.skipped, report.unique);
        assert_eq!(configuration_outcomes(&dag, &report), vec![false]);
    }

    #[test]
    fn diamond_makespan() {
        let g = diamond();
        let dag = build_dag(Arc::clone(&g), &[cfg(&g, vec![0, 0, 0, 0])]);
        let report = simulate(&dag, |_, _| true, 2, unit_latency).unwrap();
        assert_eq!(report.makespan, 3.0);
        let serial = simulate(&dag, |_, _| true, 1, unit_latency).unwrap();
        assert_eq!(serial.makespan, 4.0);
    }

    #[test]
    fn zero_workers_rejected() {
        let g = diamond();
        let dag = build_dag(Arc::clone(&g), &[cfg(&g, vec![0, 0, 0, 0])]);
        assert!(matches!(simulate(&dag, |_, _| true, 0, unit_latency), Err(SimError::NoWorkers)));
    }

    #[test]
    fn synthetic_oracle_counts() {
        let g = chain3();
        let empty = SyntheticOracle::new(Arc::clone(&g), &PlantedRuleSet::default(), 0).unwrap();
        assert_eq!(empty.good_configurations().unwrap().len(), 8);

        let rules = PlantedRuleSet {
            forbidden: vec![ForbiddenPair {
                parent: "a".into(),
                parent_version: "v2".into(),
                child: "b".into(),
                child_version: "v1".into(),
            }],
            noise: 0.0,
        };
        let oracle = SyntheticOracle::new(Arc::clone(&g), &rules, 0).unwrap();
        assert_eq!(oracle.good_configurations().unwrap().len(), 6);
        let x = cfg(&g, vec![1, 0, 1]);
        assert!(!oracle.outcome(&x));
        assert_eq!(oracle.outcome(&x), oracle.outcome(&x));
    }

    #[test]
    fn rules_must_sit_on_edges() {
        let g = chain3();
        let rules = PlantedRuleSet {
            forbidden: vec![ForbiddenPair {
                parent: "a".into(),
                parent_version: "v1".into(),
                child: "c".into(),
                child_version: "v1".into(),
            }],
            noise: 0.0,
        };
        assert!(matches!(SyntheticOracle::new(g, &rules, 0), Err(SimError::NotAnEdge { .. })));
    }

    #[test]
    fn noise_is_deterministic() {
        let g = chain3();
        let rules = PlantedRuleSet {
            forbidden: vec![],
            noise: 0.5,
        };
        let o = SyntheticOracle::new(Arc::clone(&g), &rules, 11).unwrap();
        let outcomes: Vec<bool> = g.configurations().map(|c| o.outcome(&c)).collect();
        let again: Vec<bool> = g.configurations().map(|c| o.outcome(&c)).collect();
        assert_eq!(outcomes, again);
    }

    #[test]
    fn benchmark_full_success_has_no_rules() {
        let b = generate_benchmark(&BenchmarkSpec {
            target_success_rate: 1.0,
            ..BenchmarkSpec::default()
        })
        .unwrap();
        assert!(b.rules.forbidden.is_empty());
    }

    #[test]
    fn benchmark_hits_target_rate() {
        let spec = BenchmarkSpec {
            packages: 4,
            domain_sizes: DomainSizes::Fixed(vec![2, 4, 5, 5]),
            rule_density: 1.0,
            target_success_rate: 0.10,
            noise: 0.0,
            seed: 9,
        };
        let b = generate_benchmark(&spec).unwrap();
        assert_eq!(b.graph.space_size_u64(), Some(200));
        let oracle = SyntheticOracle::new(Arc::clone(&b.graph), &b.rules, 0).unwrap();
        let rate = oracle.success_rate().unwrap();
        assert!((0.08..=0.12).contains(&rate), "{rate}");

        let again = generate_benchmark(&spec).unwrap();
        assert_eq!(b.graph.to_json(), again.graph.to_json());
        assert_eq!(b.rules, again.rules);
    }
}
