// Build a batch of configurations as one shared DAG on a worker pool.

use std::sync::Arc;

use buildtune::buildsim::{
    build_dag, configuration_outcomes, generate_benchmark, simulate, BenchmarkSpec, LatencyModel, SyntheticOracle,
};
use buildtune::configspace::random_configuration;
use buildtune::seeding;

fn main() -> anyhow::Result<()> {
    let bench = generate_benchmark(&BenchmarkSpec {
        packages: 8,
        target_success_rate: 0.3,
        seed: 8,
        ..BenchmarkSpec::default()
    })?;
    let oracle = SyntheticOracle::new(Arc::clone(&bench.graph), &bench.rules, 0)?;
    let mut rng = seeding::stream(8, "simulate");
    let configs: Vec<_> = (0..60).map(|_| random_configuration(&bench.graph, &mut rng)).collect();

    let dag = build_dag(Arc::clone(&bench.graph), &configs);
    println!("{} configurations -> {} unique units, {} arcs", configs.len(), dag.len(), dag.edge_count());

    let latency = LatencyModel::LogNormal { mu: 0.0, sigma: 0.5, seed: 1 };
    for workers in [1, 2, 4, 8, 16] {
        let r = simulate(&dag, |_, u| oracle.unit_outcome(&dag, u), workers, |_, u| latency.latency(u))?;
        println!(
            "workers {workers:>2}: makespan {:>7.2}  attempted {} succeeded {} failed {} skipped {}",
            r.makespan, r.attempted, r.succeeded, r.failed, r.skipped
        );
    }

    let r = simulate(&dag, |_, u| oracle.unit_outcome(&dag, u), 4, |_, _| 1.0)?;
    let built = configuration_outcomes(&dag, &r).iter().filter(|b| **b).count();
    println!("{built} of {} configurations built", configs.len());
    Ok(())
}
