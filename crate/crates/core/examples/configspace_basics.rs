// Define a dependency graph, count its configurations and fingerprint one.

use buildtune::configspace::{digest, random_configuration, Configuration, DependencyGraph, Package};
use buildtune::seeding;

fn main() {
    let graph = DependencyGraph::new(
        "hdf5",
        vec![
            Package::new("hdf5", ["1.10.7", "1.12.1"]),
            Package::new("openmpi", ["3.1.6", "4.0.5", "4.1.1"]),
            Package::new("zlib", ["1.2.11", "1.2.12"]),
            Package::new("hwloc", ["1.11.13", "2.4.1"]),
        ],
        &[("hdf5", "openmpi"), ("hdf5", "zlib"), ("openmpi", "hwloc"), ("openmpi", "zlib")],
    )
    .expect("valid graph");

    println!("{} packages, {} configurations", graph.len(), graph.space_size());
    println!("build order (dependencies last): {:?}", graph.topological_order());

    let pinned = Configuration::from_labels(
        &graph,
        [("hdf5", "1.12.1"), ("openmpi", "4.1.1"), ("zlib", "1.2.12"), ("hwloc", "2.4.1")],
    )
    .expect("known versions");
    println!("{:?} -> {}", pinned.labels(&graph), digest(&graph, &pinned));

    let mut rng = seeding::stream(7, "bootstrap");
    for _ in 0..3 {
        let x = random_configuration(&graph, &mut rng);
        println!("random {:?}", x.labels(&graph));
    }

    let bad = Configuration::from_labels(&graph, [("hdf5", "2.0")]);
    println!("incomplete assignment rejected: {}", bad.unwrap_err());
}
