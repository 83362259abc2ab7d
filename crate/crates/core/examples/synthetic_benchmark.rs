// Generate a benchmark with a target success rate and write its files.

use std::sync::Arc;

use buildtune::buildsim::{generate_benchmark, BenchmarkSpec, DomainSizes, PlantedRuleSet, SyntheticOracle};
use buildtune::configspace::DependencyGraph;

fn main() -> anyhow::Result<()> {
    let spec = BenchmarkSpec {
        packages: 4,
        domain_sizes: DomainSizes::Fixed(vec![2, 4, 5, 5]),
        rule_density: 1.0,
        target_success_rate: 0.1,
        noise: 0.0,
        seed: 9,
    };
    let bench = generate_benchmark(&spec)?;
    let oracle = SyntheticOracle::new(Arc::clone(&bench.graph), &bench.rules, 0)?;
    println!(
        "{} configurations, {} rules, success rate {:.3}",
        bench.graph.space_size(),
        bench.rules.forbidden.len(),
        oracle.success_rate()?
    );

    let dir = tempfile::tempdir()?;
    bench.graph.save(dir.path().join("graph.json"))?;
    bench.rules.save(dir.path().join("rules.json"))?;
    let graph = DependencyGraph::load(dir.path().join("graph.json"))?;
    let rules = PlantedRuleSet::load(dir.path().join("rules.json"))?;
    assert_eq!(graph.to_json(), bench.graph.to_json());
    assert_eq!(rules, bench.rules);
    println!("round-tripped through {}", dir.path().display());
    Ok(())
}
