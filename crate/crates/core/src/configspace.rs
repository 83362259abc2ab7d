//! Dependency graphs, version domains and configurations.
//!
//! A [`DependencyGraph`] is only obtainable through validation, so every
//! graph handed to the rest of the crate satisfies its structural
//! invariants. Raw, possibly-broken input lives in [`GraphDraft`].

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::path::Path;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

const DIGEST_TAG: &[u8] = b"buildtune.config.v1";

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("package {package} has an empty version domain")]
    EmptyDomain { package: String },
    #[error("package {package} lists version {version:?} more than once")]
    DuplicateVersion { package: String, version: String },
    #[error("package name {0:?} declared more than once")]
    DuplicatePackage(String),
    #[error("root index {0} is out of range")]
    RootOutOfRange(usize),
    #[error("unknown package {0:?}")]
    UnknownPackage(String),
    #[error("edge ({parent}, {child}) references a package index that does not exist")]
    DanglingEdge { parent: usize, child: usize },
    #[error("self-edge at package {0}")]
    SelfEdge(usize),
    #[error("edge ({parent}, {child}) declared more than once")]
    DuplicateEdge { parent: usize, child: usize },
    #[error("dependency cycle through package {0}")]
    Cycle(String),
    #[error("package {0} is not reachable from the root")]
    Unreachable(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed graph file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("assignment has {got} entries, graph has {expected} packages")]
    Length { expected: usize, got: usize },
    #[error("version index {index} out of range for package {package} ({size} versions)")]
    VersionOutOfRange {
        package: String,
        index: usize,
        size: usize,
    },
    #[error("unknown package {0:?}")]
    UnknownPackage(String),
    #[error("unknown version {version:?} for package {package}")]
    UnknownVersion { package: String, version: String },
    #[error("no version given for package {0}")]
    MissingPackage(String),
}

/// A package together with its ordered version labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Package {
    pub name: String,
    pub versions: Vec<String>,
}

impl Package {
    pub fn new<S: Into<String>>(name: S, versions: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            name: name.into(),
            versions: versions.into_iter().map(Into::into).collect(),
        }
    }
}

/// Unvalidated graph description, indices into `packages`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphDraft {
    pub packages: Vec<Package>,
    pub edges: Vec<(usize, usize)>,
    pub root: usize,
}

/// On-disk graph layout. Edges reference packages by name.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub root: String,
    pub packages: Vec<Package>,
    pub edges: Vec<(String, String)>,
}

impl GraphDraft {
    pub fn validate(self) -> Result<DependencyGraph, GraphError> {
        validate_graph(&self)?;
        Ok(DependencyGraph::from_valid_draft(self))
    }
}

impl TryFrom<GraphFile> for GraphDraft {
    type Error = GraphError;

    fn try_from(file: GraphFile) -> Result<Self, GraphError> {
        let mut index = HashMap::new();
        for (i, p) in file.packages.iter().enumerate() {
            if index.insert(p.name.clone(), i).is_some() {
                return Err(GraphError::DuplicatePackage(p.name.clone()));
            }
        }
        let lookup = |name: &String| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| GraphError::UnknownPackage(name.clone()))
        };
        let root = lookup(&file.root)?;
        let edges = file
            .edges
            .iter()
            .map(|(p, c)| Ok((lookup(p)?, lookup(c)?)))
            .collect::<Result<Vec<_>, GraphError>>()?;
        Ok(GraphDraft {
            packages: file.packages,
            edges,
            root,
        })
    }
}

/// Checks every structural invariant of a dependency graph, reporting the
/// first violation found.
pub fn validate_graph(draft: &GraphDraft) -> Result<(), GraphError> {
    let n = draft.packages.len();
    let mut names = HashSet::new();
    for p in &draft.packages {
        if p.versions.is_empty() {
            return Err(GraphError::EmptyDomain {
                package: p.name.clone(),
            });
        }
        let mut seen = HashSet::new();
        for v in &p.versions {
            if !seen.insert(v) {
                return Err(GraphError::DuplicateVersion {
                    package: p.name.clone(),
                    version: v.clone(),
                });
            }
        }
        if !names.insert(&p.name) {
            return Err(GraphError::DuplicatePackage(p.name.clone()));
        }
    }
    if draft.root >= n {
        return Err(GraphError::RootOutOfRange(draft.root));
    }
    let mut edge_set = HashSet::new();
    for &(parent, child) in &draft.edges {
        if parent >= n || child >= n {
            return Err(GraphError::DanglingEdge { parent, child });
        }
        if parent == child {
            return Err(GraphError::SelfEdge(parent));
        }
        if !edge_set.insert((parent, child)) {
            return Err(GraphError::DuplicateEdge { parent, child });
        }
    }
    if let Err(node) = topological_order(n, &draft.edges) {
        return Err(GraphError::Cycle(draft.packages[node].name.clone()));
    }
    let children = adjacency(n, &draft.edges);
    let mut reached = vec![false; n];
    reached[draft.root] = true;
    let mut queue = VecDeque::from([draft.root]);
    while let Some(u) = queue.pop_front() {
        for &c in &children[u] {
            if !reached[c] {
                reached[c] = true;
                queue.push_back(c);
            }
        }
    }
    if let Some(i) = reached.iter().position(|r| !r) {
        return Err(GraphError::Unreachable(draft.packages[i].name.clone()));
    }
    Ok(())
}

fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut children = vec![Vec::new(); n];
    for &(p, c) in edges {
        children[p].push(c);
    }
    children
}

/// Kahn's algorithm; parents precede children. On a cycle, returns some node on it.
fn topological_order(n: usize, edges: &[(usize, usize)]) -> Result<Vec<usize>, usize> {
    let children = adjacency(n, edges);
    let mut indegree = vec![0usize; n];
    for &(_, c) in edges {
        indegree[c] += 1;
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &c in &children[u] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                queue.push_back(c);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).find(|&i| indegree[i] > 0).unwrap_or(0))
    }
}

/// A validated dependency graph: packages with finite version domains and
/// parent→child dependency edges, all reachable from the root.
#[derive(Debug, Clone)]
pub struct DependencyGraph {
    packages: Vec<Package>,
    edges: Vec<(usize, usize)>,
    root: usize,
    index: HashMap<String, usize>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
    canonical: Vec<usize>,
    edge_identity: Vec<u8>,
}

impl PartialEq for DependencyGraph {
    fn eq(&self, other: &Self) -> bool {
        self.packages == other.packages && self.edges == other.edges && self.root == other.root
    }
}

impl DependencyGraph {
    /// Builds and validates a graph from named packages and named edges.
    pub fn new(
        root: &str,
        packages: Vec<Package>,
        edges: &[(&str, &str)],
    ) -> Result<Self, GraphError> {
        let file = GraphFile {
            root: root.to_string(),
            packages,
            edges: edges
                .iter()
                .map(|(p, c)| (p.to_string(), c.to_string()))
                .collect(),
        };
        Self::from_file_repr(file)
    }

    pub fn from_file_repr(file: GraphFile) -> Result<Self, GraphError> {
        GraphDraft::try_from(file)?.validate()
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        Self::from_file_repr(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_file_repr(&self) -> GraphFile {
        GraphFile {
            root: self.packages[self.root].name.clone(),
            packages: self.packages.clone(),
            edges: self
                .edges
                .iter()
                .map(|&(p, c)| (self.name(p).to_string(), self.name(c).to_string()))
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file_repr()).expect("graph serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_json() + "\n")
    }

    fn from_valid_draft(draft: GraphDraft) -> Self {
        let n = draft.packages.len();
        let index = draft
            .packages
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.clone(), i))
            .collect();
        let children = adjacency(n, &draft.edges);
        let topo = topological_order(n, &draft.edges).expect("validated graph is acyclic");
        let mut canonical: Vec<usize> = (0..n).collect();
        canonical.sort_by(|&a, &b| draft.packages[a].name.cmp(&draft.packages[b].name));

        let mut named_edges: Vec<(&str, &str)> = draft
            .edges
            .iter()
            .map(|&(p, c)| (draft.packages[p].name.as_str(), draft.packages[c].name.as_str()))
            .collect();
        named_edges.sort_unstable();
        let mut edge_identity = Vec::new();
        push_len_prefixed(&mut edge_identity, draft.packages[draft.root].name.as_bytes());
        edge_identity.extend_from_slice(&(named_edges.len() as u64).to_le_bytes());
        for (p, c) in named_edges {
            push_len_prefixed(&mut edge_identity, p.as_bytes());
            push_len_prefixed(&mut edge_identity, c.as_bytes());
        }

        Self {
            packages: draft.packages,
            edges: draft.edges,
            root: draft.root,
            index,
            children,
            topo,
            canonical,
            edge_identity,
        }
    }

    pub fn len(&self) -> usize {
        self.packages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packages.is_empty()
    }

    pub fn packages(&self) -> &[Package] {
        &self.packages
    }

    pub fn name(&self, package: usize) -> &str {
        &self.packages[package].name
    }

    pub fn versions(&self, package: usize) -> &[String] {
        &self.packages[package].versions
    }

    pub fn domain_size(&self, package: usize) -> usize {
        self.packages[package].versions.len()
    }

    pub fn domain_sizes(&self) -> Vec<usize> {
        self.packages.iter().map(|p| p.versions.len()).collect()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn children(&self, package: usize) -> &[usize] {
        &self.children[package]
    }

    /// Packages ordered so that every parent precedes its children.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn package_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn version_index(&self, package: usize, label: &str) -> Option<usize> {
        self.packages[package].versions.iter().position(|v| v == label)
    }

    pub fn edge_index(&self, parent: usize, child: usize) -> Option<usize> {
        self.edges.iter().position(|&e| e == (parent, child))
    }

    /// Number of distinct configurations as an exact integer.
    pub fn space_size(&self) -> BigUint {
        space_size(self)
    }

    /// Number of configurations if it fits in a `u64`.
    pub fn space_size_u64(&self) -> Option<u64> {
        self.packages
            .iter()
            .try_fold(1u64, |acc, p| acc.checked_mul(p.versions.len() as u64))
    }

    /// Iterates every configuration in mixed-radix order (last package fastest).
    pub fn configurations(&self) -> ConfigurationIter<'_> {
        ConfigurationIter {
            sizes: self.domain_sizes(),
            next: Some(vec![0; self.len()]),
            _graph: self,
        }
    }
}

fn push_len_prefixed(buf: &mut Vec<u8>, bytes: &[u8]) {
    buf.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
    buf.extend_from_slice(bytes);
}

/// Product of all domain sizes.
pub fn space_size(graph: &DependencyGraph) -> BigUint {
    graph
        .packages
        .iter()
        .fold(BigUint::from(1u32), |acc, p| acc * p.versions.len())
}

pub struct ConfigurationIter<'g> {
    sizes: Vec<usize>,
    next: Option<Vec<u32>>,
    _graph: &'g DependencyGraph,
}

impl Iterator for ConfigurationIter<'_> {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut carry = true;
        for i in (0..succ.len()).rev() {
            succ[i] += 1;
            if (succ[i] as usize) < self.sizes[i] {
                carry = false;
                break;
            }
            succ[i] = 0;
        }
        if !carry {
            self.next = Some(succ);
        }
        Some(Configuration(current))
    }
}

/// One version index per package, aligned with the graph's package order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration(Vec<u32>);

impl Configuration {
    pub fn new(graph: &DependencyGraph, assignment: Vec<u32>) -> Result<Self, ConfigError> {
        if assignment.len() != graph.len() {
            return Err(ConfigError::Length {
                expected: graph.len(),
                got: assignment.len(),
            });
        }
        for (i, &v) in assignment.iter().enumerate() {
            if v as usize >= graph.domain_size(i) {
                return Err(ConfigError::VersionOutOfRange {
                    package: graph.name(i).to_string(),
                    index: v as usize,
                    size: graph.domain_size(i),
                });
            }
        }
        Ok(Self(assignment))
    }

    /// Builds a configuration from a complete `package -> version label` map.
    pub fn from_labels<K, V>(
        graph: &DependencyGraph,
        labels: impl IntoIterator<Item = (K, V)>,
    ) -> Result<Self, ConfigError>
    where
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut assignment: Vec<Option<u32>> = vec![None; graph.len()];
        for (k, v) in labels {
            let (k, v) = (k.as_ref(), v.as_ref());
            let p = graph
                .package_index(k)
                .ok_or_else(|| ConfigError::UnknownPackage(k.to_string()))?;
            let idx = graph
                .version_index(p, v)
                .ok_or_else(|| ConfigError::UnknownVersion {
                    package: k.to_string(),
                    version: v.to_string(),
                })?;
            assignment[p] = Some(idx as u32);
        }
        let assignment = assignment
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| ConfigError::MissingPackage(graph.name(i).to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self(assignment))
    }

    pub fn assignment(&self) -> &[u32] {
        &self.0
    }

    pub fn version(&self, package: usize) -> usize {
        self.0[package] as usize
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self, graph: &DependencyGraph) -> BTreeMap<String, String> {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &v)| (graph.name(i).to_string(), graph.versions(i)[v as usize].clone()))
            .collect()
    }
}

/// Uniform random configuration; one draw per package in index order.
pub fn random_configuration<R: Rng + ?Sized>(graph: &DependencyGraph, rng: &mut R) -> Configuration {
    Configuration(
        (0..graph.len())
            .map(|i| rng.random_range(0..graph.domain_size(i)) as u32)
            .collect(),
    )
}

/// SHA-256 over the canonical (name-sorted, length-prefixed) encoding of a
/// configuration and the identity of its graph.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConfigDigest([u8; 32]);

impl ConfigDigest {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn from_bytes(bytes: [u8; 32]) -> Self {
        Self(bytes)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for ConfigDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for ConfigDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConfigDigest({})", &self.to_hex()[..16])
    }
}

impl Serialize for ConfigDigest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for ConfigDigest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        let mut out = [0u8; 32];
        hex::decode_to_slice(&text, &mut out).map_err(serde::de::Error::custom)?;
        Ok(Self(out))
    }
}

pub fn digest(graph: &DependencyGraph, config: &Configuration) -> ConfigDigest {
    let mut hasher = Sha256::new();
    hasher.update(DIGEST_TAG);
    hasher.update((graph.len() as u64).to_le_bytes());
    for &i in &graph.canonical {
        let mut buf = Vec::new();
        push_len_prefixed(&mut buf, graph.name(i).as_bytes());
        push_len_prefixed(&mut buf, graph.versions(i)[config.version(i)].as_bytes());
        hasher.update(&buf);
    }
    hasher.update(&graph.edge_identity);
    ConfigDigest(hasher.finalize().into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain(sizes: &[usize]) -> DependencyGraph {
        let names: Vec<String> = (0..sizes.len()).map(|i| format!("p{i}")).collect();
        let packages = names
            .iter()
            .zip(sizes)
            .map(|(n, &m)| Package::new(n.clone(), (0..m).map(|v| format!("{v}.0"))))
            .collect();
        let edges: Vec<(&str, &str)> = names
            .windows(2)
            .map(|w| (w[0].as_str(), w[1].as_str()))
            .collect();
        DependencyGraph::new("p0", packages, &edges).unwrap()
    }

    fn draft(edges: Vec<(usize, usize)>) -> GraphDraft {
        GraphDraft {
            packages: vec![
                Package::new("a", ["1", "2"]),
                Package::new("b", ["1", "2"]),
                Package::new("c", ["1", "2"]),
            ],
            edges,
            root: 0,
        }
    }

    #[test]
    fn chain_is_valid() {
        assert!(validate_graph(&draft(vec![(0, 1), (1, 2)])).is_ok());
    }

    #[test]
    fn rejects_self_edge() {
        let err = validate_graph(&draft(vec![(0, 0), (0, 1), (1, 2)])).unwrap_err();
        assert!(matches!(err, GraphError::SelfEdge(0)), "{err}");
    }

    #[test]
    fn rejects_empty_domain() {
        let mut d = draft(vec![(0, 1), (1, 2)]);
        d.packages[2].versions.clear();
        assert!(matches!(
            validate_graph(&d).unwrap_err(),
            GraphError::EmptyDomain { package } if package == "c"
        ));
    }

    #[test]
    fn rejects_cycle_dangling_duplicate_unreachable() {
        assert!(matches!(
            validate_graph(&draft(vec![(0, 1), (1, 2), (2, 1)])).unwrap_err(),
            GraphError::Cycle(_)
        ));
        assert!(matches!(
            validate_graph(&draft(vec![(0, 1), (1, 7)])).unwrap_err(),
            GraphError::DanglingEdge { parent: 1, child: 7 }
        ));
        assert!(matches!(
            validate_graph(&draft(vec![(0, 1)])).unwrap_err(),
            GraphError::Unreachable(name) if name == "c"
        ));
        let mut d = draft(vec![(0, 1), (1, 2)]);
        d.packages[1].versions = vec!["1".into(), "1".into()];
        assert!(matches!(
            validate_graph(&d).unwrap_err(),
            GraphError::DuplicateVersion { .. }
        ));
    }

    #[test]
    fn space_size_products() {
        assert_eq!(chain(&[2, 3, 4]).space_size(), BigUint::from(24u32));
        assert_eq!(chain(&[1]).space_size(), BigUint::from(1u32));
        assert_eq!(chain(&[10; 6]).space_size(), BigUint::from(1_000_000u32));
    }

    #[test]
    fn space_size_matches_enumeration() {
        for sizes in [vec![1], vec![2, 3], vec![3, 1, 4], vec![2, 2, 2, 5, 5]] {
            let g = chain(&sizes);
            let enumerated = g.configurations().count();
            assert_eq!(BigUint::from(enumerated), g.space_size());
            let distinct: HashSet<_> = g.configurations().collect();
            assert_eq!(distinct.len(), enumerated);
        }
    }

    #[test]
    fn forced_and_deterministic_sampling() {
        let g = chain(&[1, 1, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(random_configuration(&g, &mut rng).assignment(), &[0, 0, 0]);

        let g = chain(&[3, 4, 5]);
        let a = random_configuration(&g, &mut ChaCha8Rng::seed_from_u64(9));
        let b = random_configuration(&g, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_frequencies_are_uniform() {
        let g = chain(&[4]);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            counts[random_configuration(&g, &mut rng).version(0)] += 1;
        }
        // binomial(10000, 1/4): sd = sqrt(10000 * 0.25 * 0.75)
        let sd = (10_000.0f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - 2500.0).abs() <= 3.0 * sd, "{counts:?}");
        }
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - 2500.0).powi(2) / 2500.0)
            .sum();
        // 3 d.o.f., p = 0.001 critical value
        assert!(chi2 < 16.27, "chi2 = {chi2}");
    }

    #[test]
    fn digest_determinism_and_sensitivity() {
        let g = chain(&[3, 3, 3]);
        let a = Configuration::new(&g, vec![0, 1, 2]).unwrap();
        let b = Configuration::new(&g, vec![0, 1, 1]).unwrap();
        let first = digest(&g, &a);
        for _ in 0..1000 {
            assert_eq!(digest(&g, &a), first);
        }
        assert_ne!(digest(&g, &a), digest(&g, &b));
    }

    #[test]
    fn digest_ignores_declaration_order() {
        let g1 = DependencyGraph::new(
            "root",
            vec![
                Package::new("root", ["1", "2"]),
                Package::new("zlib", ["1.2", "1.3"]),
                Package::new("cmake", ["3.1", "3.2", "3.3"]),
            ],
            &[("root", "zlib"), ("root", "cmake")],
        )
        .unwrap();
        let g2 = DependencyGraph::new(
            "root",
            vec![
                Package::new("cmake", ["3.1", "3.2", "3.3"]),
                Package::new("root", ["1", "2"]),
                Package::new("zlib", ["1.2", "1.3"]),
            ],
            &[("root", "cmake"), ("root", "zlib")],
        )
        .unwrap();
        let labels = [("root", "2"), ("zlib", "1.2"), ("cmake", "3.3")];
        let c1 = Configuration::from_labels(&g1, labels).unwrap();
        let c2 = Configuration::from_labels(&g2, labels).unwrap();
        assert_ne!(c1.assignment(), c2.assignment());
        assert_eq!(digest(&g1, &c1), digest(&g2, &c2));
    }

    #[test]
    fn graph_file_round_trip() {
        let g = chain(&[2, 3, 2]);
        let back = DependencyGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn labels_must_be_complete() {
        let g = chain(&[2, 2]);
        assert_eq!(
            Configuration::from_labels(&g, [("p0", "0.0")]).unwrap_err(),
            ConfigError::MissingPackage("p1".into())
        );
        assert!(matches!(
            Configuration::from_labels(&g, [("p0", "9.9"), ("p1", "0.0")]).unwrap_err(),
            ConfigError::UnknownVersion { .. }
        ));
    }
}
