// Precision/recall sweep and train/test AUPRC over a labeled dataset.

use std::sync::Arc;

use buildtune::buildsim::{generate_benchmark, BenchmarkSpec, SyntheticOracle};
use buildtune::metrics::{auprc_experiment, mean, reports_to_csv, sweep_experiment, ExperimentOptions};
use buildtune::sampler::Strategy;

fn main() -> anyhow::Result<()> {
    let bench = generate_benchmark(&BenchmarkSpec {
        packages: 7,
        target_success_rate: 0.12,
        seed: 21,
        ..BenchmarkSpec::default()
    })?;
    let oracle = SyntheticOracle::new(Arc::clone(&bench.graph), &bench.rules, 0)?;
    let dataset = oracle.enumerate_dataset()?;
    println!("{} configurations, {} good", dataset.len(), dataset.good_count());

    let opts = ExperimentOptions::default();
    let reports = sweep_experiment(&dataset, &Strategy::ALL, &[20, 50, 100], 5, 42, &opts)?;
    print!("{}", reports_to_csv(&reports));

    if dataset.len() >= 2 * (opts.bootstrap_size + opts.selections) {
        for strategy in Strategy::ALL {
            let v: Vec<f64> = (0..3)
                .map(|seed| auprc_experiment(&dataset, strategy, seed, &opts))
                .collect::<Result<_, _>>()?;
            println!("{strategy} AUPRC {:.3}", mean(&v));
        }
    }
    Ok(())
}
