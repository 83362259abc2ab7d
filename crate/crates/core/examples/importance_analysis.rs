// Which packages and edges separate good from bad builds, and which version
// pairs look incompatible.

use std::sync::Arc;

use buildtune::analysis::{extract_constraints, importance_ranking, pair_compatibility, DEFAULT_CONSTRAINT_THRESHOLD};
use buildtune::buildsim::{generate_benchmark, BenchmarkSpec, SyntheticOracle};
use buildtune::surrogate::fit;

fn main() -> anyhow::Result<()> {
    let bench = generate_benchmark(&BenchmarkSpec {
        packages: 6,
        rule_density: 0.2,
        target_success_rate: 0.5,
        seed: 4,
        ..BenchmarkSpec::default()
    })?;
    println!("planted rules:");
    for r in &bench.rules.forbidden {
        println!("  {}@{} x {}@{}", r.parent, r.parent_version, r.child, r.child_version);
    }

    let oracle = SyntheticOracle::new(Arc::clone(&bench.graph), &bench.rules, 0)?;
    let data = oracle.enumerate_dataset()?;
    let model = fit(data.records(), Arc::clone(&bench.graph), 1.0)?;

    println!("\nimportance (top 5):");
    for e in importance_ranking(&model, 5) {
        println!("  {:<12} {:.3}", e.target.to_string(), e.score);
    }

    let first = &bench.rules.forbidden[0];
    let matrix = pair_compatibility(&model, &first.parent, &first.child)?;
    println!("\n{}", matrix.to_csv());
    for c in extract_constraints(&matrix, DEFAULT_CONSTRAINT_THRESHOLD)? {
        println!("avoid {}@{} with {}@{} (EI {:.3})", c.parent, c.parent_version, c.child, c.child_version, c.ei);
    }
    Ok(())
}
