#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use buildtune::configspace::{Configuration, DependencyGraph, GraphDraft, Package};
use buildtune::dataset::BuildRecord;
use buildtune::seeding;
use proptest::prelude::*;
use rand::Rng;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Rooted DAG over `sizes.len()` packages: every package after the root gets
/// one parent among its predecessors, plus occasional extra parents.
pub fn random_dag(sizes: &[usize], seed: u64) -> DependencyGraph {
    let mut rng = seeding::stream(seed, "test-graph");
    let mut edges = Vec::new();
    for j in 1..sizes.len() {
        let first = rng.random_range(0..j);
        edges.push((first, j));
        for i in 0..j {
            if i != first && rng.random_bool(0.2) {
                edges.push((i, j));
            }
        }
    }
    GraphDraft {
        packages: sizes
            .iter()
            .enumerate()
            .map(|(i, &m)| Package::new(format!("p{i}"), (0..m).map(|v| format!("{v}.0"))))
            .collect(),
        edges,
        root: 0,
    }
    .validate()
    .expect("generated DAG is valid")
}

pub fn graph_strategy(max_packages: usize, max_domain: usize) -> impl Strategy<Value = Arc<DependencyGraph>> {
    (prop::collection::vec(1..=max_domain, 1..=max_packages), any::<u64>())
        .prop_map(|(sizes, seed)| Arc::new(random_dag(&sizes, seed)))
}

pub fn config_strategy(graph: &DependencyGraph) -> impl Strategy<Value = Configuration> {
    let g = graph.clone();
    graph
        .domain_sizes()
        .into_iter()
        .map(|m| 0..m as u32)
        .collect::<Vec<_>>()
        .prop_map(move |a| Configuration::new(&g, a).unwrap())
}

/// Graph plus a labeled history of arbitrary length (duplicates allowed).
pub fn history_strategy(
    max_packages: usize,
    max_domain: usize,
    max_records: usize,
) -> impl Strategy<Value = (Arc<DependencyGraph>, Vec<BuildRecord>)> {
    graph_strategy(max_packages, max_domain).prop_flat_map(move |g| {
        let recs = prop::collection::vec(
            (config_strategy(&g), any::<bool>()).prop_map(|(c, b)| BuildRecord::new(c, b)),
            0..=max_records,
        );
        (Just(g), recs)
    })
}
