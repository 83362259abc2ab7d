// Adaptive sampling against a synthetic oracle, compared with random picks.

use std::sync::Arc;

use buildtune::buildsim::{generate_benchmark, BenchmarkSpec, SyntheticOracle};
use buildtune::metrics::precision;
use buildtune::sampler::{run, SamplerConfig, Strategy};

fn main() -> anyhow::Result<()> {
    let bench = generate_benchmark(&BenchmarkSpec {
        packages: 8,
        target_success_rate: 0.1,
        seed: 3,
        ..BenchmarkSpec::default()
    })?;
    let oracle = SyntheticOracle::new(Arc::clone(&bench.graph), &bench.rules, 3)?;
    println!(
        "{} configurations, true success rate {:.3}",
        bench.graph.space_size(),
        oracle.success_rate()?
    );

    for strategy in Strategy::ALL {
        let cfg = SamplerConfig {
            strategy,
            budget: 80,
            seed: 11,
            ..SamplerConfig::default()
        };
        let out = run(&oracle, &bench.graph, &cfg)?;
        println!(
            "{strategy:>8}: {} of {} built (precision {:.2})",
            out.history.good_count(),
            out.history.len(),
            precision(out.history.records())?
        );
        if strategy == Strategy::Bayesian {
            for step in out.trace.iter().take(3) {
                println!("          t={} score={:.3} built={}", step.t, step.score, step.built);
            }
        }
    }
    Ok(())
}
