// Write a labeled dataset to disk, read it back, summarize and split it.

use std::sync::Arc;

use buildtune::buildsim::{generate_benchmark, BenchmarkSpec, SyntheticOracle};
use buildtune::dataset::{load_dataset, split_train_test, summarize};
use buildtune::seeding;

fn main() -> anyhow::Result<()> {
    let bench = generate_benchmark(&BenchmarkSpec {
        packages: 6,
        target_success_rate: 0.2,
        ..BenchmarkSpec::default()
    })?;
    let oracle = SyntheticOracle::new(Arc::clone(&bench.graph), &bench.rules, 0)?;
    let dataset = oracle.enumerate_dataset()?;

    let dir = tempfile::tempdir()?;
    bench.graph.save(dir.path().join("graph.json"))?;
    dataset.save(dir.path().join("builds.jsonl"), "graph.json")?;

    let loaded = load_dataset(dir.path().join("builds.jsonl"))?;
    let summary = summarize(&loaded);
    println!("{summary}");
    println!("success rate {:.3}", summary.success_rate());

    let (train, test) = split_train_test(&loaded, 0.5, &mut seeding::stream(1, "split"))?;
    println!("train {} / test {}", train.len(), test.len());
    Ok(())
}
