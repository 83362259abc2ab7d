//! Labeled build outcomes and their JSON Lines file format.
//!
//! A record file starts with a header line naming the graph file and the
//! format version, followed by one record per line:
//!
//! ```text
//! {"graph":"graph.json","format_version":1}
//! {"versions":{"abyss":"2.3.1","boost":"1.79.0"},"built":true}
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configspace::{digest, ConfigDigest, ConfigError, Configuration, DependencyGraph, GraphError};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Config {
        line: usize,
        #[source]
        source: ConfigError,
    },
    #[error("line {line}: duplicate configuration {digest}")]
    Duplicate { line: usize, digest: ConfigDigest },
    #[error("unsupported record format version {0}")]
    UnsupportedVersion(u32),
    #[error("dataset is empty")]
    Empty,
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    BadFraction(f64),
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A configuration and whether it built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildRecord {
    pub config: Configuration,
    pub built: bool,
}

impl BuildRecord {
    pub fn new(config: Configuration, built: bool) -> Self {
        Self { config, built }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    graph: String,
    format_version: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordLine {
    versions: BTreeMap<String, String>,
    built: bool,
}

/// Records over one graph, unique by configuration digest.
#[derive(Debug, Clone)]
pub struct Dataset {
    graph: Arc<DependencyGraph>,
    records: Vec<BuildRecord>,
    digests: Vec<ConfigDigest>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        *self.graph == *other.graph && self.records == other.records
    }
}

impl Dataset {
    pub fn empty(graph: Arc<DependencyGraph>) -> Self {
        Self {
            graph,
            records: Vec::new(),
            digests: Vec::new(),
        }
    }

    pub fn new(
        graph: Arc<DependencyGraph>,
        records: impl IntoIterator<Item = BuildRecord>,
    ) -> Result<Self, DatasetError> {
        let mut ds = Self::empty(graph);
        let mut seen = HashSet::new();
        for (i, r) in records.into_iter().enumerate() {
            Configuration::new(&ds.graph, r.config.assignment().to_vec())
                .map_err(|source| DatasetError::Config { line: i + 1, source })?;
            let d = digest(&ds.graph, &r.config);
            if !seen.insert(d) {
                return Err(DatasetError::Duplicate { line: i + 1, digest: d });
            }
            ds.records.push(r);
            ds.digests.push(d);
        }
        Ok(ds)
    }

    pub fn graph(&self) -> &DependencyGraph {
        &self.graph
    }

    pub fn graph_arc(&self) -> &Arc<DependencyGraph> {
        &self.graph
    }

    pub fn records(&self) -> &[BuildRecord] {
        &self.records
    }

    pub fn digests(&self) -> &[ConfigDigest] {
        &self.digests
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn good_count(&self) -> usize {
        self.records.iter().filter(|r| r.built).count()
    }

    /// Reads records from `reader`, resolving labels against `graph`. The
    /// header line is validated but its graph path is ignored.
    pub fn read<R: BufRead>(reader: R, graph: Arc<DependencyGraph>) -> Result<Self, DatasetError> {
        let mut lines = reader.lines().enumerate();
        let mut ds = Self::empty(graph);
        let mut seen = HashSet::new();

        let header: Header = loop {
            match lines.next() {
                None => return Err(DatasetError::Parse { line: 1, message: "missing header line".into() }),
                Some((i, line)) => {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    break serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
                        line: i + 1,
                        message: format!("bad header: {e}"),
                    })?;
                }
            }
        };
        if header.format_version != FORMAT_VERSION {
            return Err(DatasetError::UnsupportedVersion(header.format_version));
        }

        for (i, line) in lines {
            let line = line?;
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let rec: RecordLine = serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
            let config = Configuration::from_labels(&ds.graph, &rec.versions)
                .map_err(|source| DatasetError::Config { line: lineno, source })?;
            let d = digest(&ds.graph, &config);
            if !seen.insert(d) {
                return Err(DatasetError::Duplicate { line: lineno, digest: d });
            }
            ds.records.push(BuildRecord::new(config, rec.built));
            ds.digests.push(d);
        }
        Ok(ds)
    }

    pub fn write<W: Write>(&self, mut out: W, graph_ref: &str) -> std::io::Result<()> {
        let header = Header {
            graph: graph_ref.to_string(),
            format_version: FORMAT_VERSION,
        };
        writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes"))?;
        for r in &self.records {
            let line = RecordLine {
                versions: r.config.labels(&self.graph),
                built: r.built,
            };
            writeln!(out, "{}", serde_json::to_string(&line).expect("record serializes"))?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>, graph_ref: &str) -> std::io::Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut file, graph_ref)?;
        file.flush()
    }

    fn subset(&self, indices: &[usize]) -> Self {
        Self {
            graph: Arc::clone(&self.graph),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            digests: indices.iter().map(|&i| self.digests[i]).collect(),
        }
    }
}

/// Loads a record file, reading the graph named in its header relative to
/// the record file's directory.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let mut reader = BufReader::new(std::fs::File::open(path)?);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let header: Header = serde_json::from_str(&first).map_err(|e| DatasetError::Parse {
        line: 1,
        message: format!("bad header: {e}"),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let graph = Arc::new(DependencyGraph::load(base.join(&header.graph))?);
    let reader = BufReader::new(std::fs::File::open(path)?);
    Dataset::read(reader, graph)
}

/// Loads a record file against an already-loaded graph.
pub fn load_dataset_with_graph(
    path: impl AsRef<Path>,
    graph: Arc<DependencyGraph>,
) -> Result<Dataset, DatasetError> {
    Dataset::read(BufReader::new(std::fs::File::open(path)?), graph)
}

/// Seeded disjoint partition with `round_half_up(fraction * N)` records on
/// the train side.
pub fn split_train_test<R: Rng + ?Sized>(
    dataset: &Dataset,
    train_fraction: f64,
    rng: &mut R,
) -> Result<(Dataset, Dataset), DatasetError> {
    if dataset.is_empty() {
        return Err(DatasetError::Empty);
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::BadFraction(train_fraction));
    }
    let n = dataset.len();
    let n_train = ((train_fraction * n as f64) + 0.5).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let (train, test) = order.split_at(n_train.min(n));
    Ok((dataset.subset(train), dataset.subset(test)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub configs: usize,
    pub good: usize,
    /// Packages other than the root.
    pub deps: usize,
}

impl DatasetSummary {
    pub fn success_rate(&self) -> f64 {
        if self.configs == 0 {
            0.0
        } else {
            self.good as f64 / self.configs as f64
        }
    }
}

impl fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>8}", "configs", self.configs)?;
        writeln!(f, "{:<10} {:>8}", "good", self.good)?;
        write!(f, "{:<10} {:>8}", "deps", self.deps)
    }
}

pub fn summarize(dataset: &Dataset) -> DatasetSummary {
    DatasetSummary {
        configs: dataset.len(),
        good: dataset.good_count(),
        deps: dataset.graph().len() - 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configspace::Package;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn graph() -> Arc<DependencyGraph> {
        Arc::new(
            DependencyGraph::new(
                "app",
                vec![
                    Package::new("app", ["1", "2", "3", "4", "5"]),
                    Package::new("lib", ["a", "b", "c", "d"]),
                    Package::new("zlib", ["x", "y", "z", "w", "v"]),
                ],
                &[("app", "lib"), ("lib", "zlib")],
            )
            .unwrap(),
        )
    }

    fn dataset(n: usize, good: usize) -> Dataset {
        let g = graph();
        let records: Vec<_> = g
            .configurations()
            .take(n)
            .enumerate()
            .map(|(i, c)| BuildRecord::new(c, i < good))
            .collect();
        Dataset::new(g, records).unwrap()
    }

    #[test]
    fn summary_counts() {
        assert_eq!(summarize(&dataset(10, 4)), DatasetSummary { configs: 10, good: 4, deps: 2 });
        let all = summarize(&dataset(7, 7));
        assert_eq!(all.good, all.configs);
    }

    #[test]
    fn empty_dataset_is_valid() {
        let g = graph();
        let text = "{\"graph\":\"g.json\",\"format_version\":1}\n";
        let ds = Dataset::read(text.as_bytes(), g).unwrap();
        assert_eq!(summarize(&ds).configs, 0);
    }

    #[test]
    fn duplicate_records_rejected() {
        let g = graph();
        let text = concat!(
            "{\"graph\":\"g.json\",\"format_version\":1}\n",
            "{\"versions\":{\"app\":\"1\",\"lib\":\"a\",\"zlib\":\"x\"},\"built\":true}\n",
            "{\"versions\":{\"app\":\"1\",\"lib\":\"a\",\"zlib\":\"x\"},\"built\":true}\n",
        );
        let err = Dataset::read(text.as_bytes(), g).unwrap_err();
        assert!(matches!(err, DatasetError::Duplicate { line: 3, .. }), "{err}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let g = graph();
        let text = concat!(
            "{\"graph\":\"g.json\",\"format_version\":1}\n",
            "{\"versions\":{\"app\":\"1\",\"lib\":\"a\",\"zlib\":\"x\"},\"built\":true}\n",
            "{\"versions\": oops}\n",
        );
        let err = Dataset::read(text.as_bytes(), Arc::clone(&g)).unwrap_err();
        assert!(matches!(err, DatasetError::Parse { line: 3, .. }), "{err}");

        let text = concat!(
            "{\"graph\":\"g.json\",\"format_version\":1}\n",
            "{\"versions\":{\"app\":\"1\",\"lib\":\"q\",\"zlib\":\"x\"},\"built\":true}\n",
        );
        let err = Dataset::read(text.as_bytes(), g).unwrap_err();
        assert!(
            matches!(err, DatasetError::Config { line: 2, source: ConfigError::UnknownVersion { .. } }),
            "{err}"
        );
    }

    #[test]
    fn split_sizes() {
        let ds = dataset(100, 30);
        let (train, test) = split_train_test(&ds, 0.5, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!((train.len(), test.len()), (50, 50));

        let one = dataset(1, 1);
        let (train, test) = split_train_test(&one, 0.5, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!((train.len(), test.len()), (1, 0));
    }

    #[test]
    fn split_is_seeded_partition() {
        let ds = dataset(61, 20);
        let a = split_train_test(&ds, 0.3, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = split_train_test(&ds, 0.3, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        let (train, test) = a;
        assert_eq!(train.len(), 18);
        let left: HashSet<_> = train.digests().iter().collect();
        let right: HashSet<_> = test.digests().iter().collect();
        assert!(left.is_disjoint(&right));
        assert_eq!(left.len() + right.len(), ds.len());
    }

    #[test]
    fn split_rejects_bad_input() {
        let ds = dataset(4, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(split_train_test(&ds, 1.0, &mut rng), Err(DatasetError::BadFraction(_))));
        let empty = Dataset::empty(graph());
        assert!(matches!(split_train_test(&empty, 0.5, &mut rng), Err(DatasetError::Empty)));
    }

    #[test]
    fn write_then_read_round_trip() {
        let ds = dataset(25, 9);
        let mut buf = Vec::new();
        ds.write(&mut buf, "graph.json").unwrap();
        let back = Dataset::read(buf.as_slice(), Arc::clone(ds.graph_arc())).unwrap();
        assert_eq!(ds, back);
    }
}
