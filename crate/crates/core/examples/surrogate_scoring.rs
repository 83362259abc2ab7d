// Fit the good/bad factor model on a small history and score candidates.

use std::sync::Arc;

use buildtune::configspace::{Configuration, DependencyGraph, Package};
use buildtune::dataset::BuildRecord;
use buildtune::surrogate::fit;

fn main() {
    let graph = Arc::new(
        DependencyGraph::new(
            "app",
            vec![
                Package::new("app", ["1.0", "2.0"]),
                Package::new("mpi", ["3.1", "4.0"]),
                Package::new("hwloc", ["1.11", "2.4"]),
            ],
            &[("app", "mpi"), ("mpi", "hwloc")],
        )
        .unwrap(),
    );
    let rec = |a: [u32; 3], built| BuildRecord::new(Configuration::new(&graph, a.to_vec()).unwrap(), built);
    // mpi 3.1 never builds against hwloc 2.4
    let history = vec![
        rec([0, 0, 0], true),
        rec([1, 1, 1], true),
        rec([0, 1, 0], true),
        rec([0, 0, 1], false),
        rec([1, 0, 1], false),
        rec([1, 1, 0], true),
    ];
    let model = fit(&history, Arc::clone(&graph), 1.0).unwrap();
    println!("alpha = {:.3}", model.alpha());

    let mut scored: Vec<(f64, f64, Configuration)> = graph
        .configurations()
        .map(|x| (model.expected_improvement(&x).value, model.crowd_score(&x).value, x))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (ei, crowd, x) in &scored {
        println!("EI {ei:.3}  crowd {crowd:.4}  {:?}", x.labels(&graph));
    }

    let updated = model.refit_incremental(&rec([0, 1, 1], true));
    println!("after one more success, alpha = {:.3}", updated.alpha());
    println!("model JSON is {} bytes", updated.to_json().len());
}
