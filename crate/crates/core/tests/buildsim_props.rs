mod common;

use std::collections::HashMap;
use std::sync::Arc;

use buildtune::buildsim::{
    build_dag, configuration_outcomes, generate_benchmark, simulate, BenchmarkSpec, BuildDag, BuildUnit, DomainSizes,
    EventKind, NodeStatus, PlantedRuleSet, SimReport, SyntheticOracle,
};
use buildtune::configspace::{random_configuration, Configuration, DependencyGraph};
use buildtune::seeding;
use common::{fixtures, graph_strategy};
use proptest::prelude::*;

fn unit(_: usize, _: &BuildUnit) -> f64 {
    1.0
}

/// DAG over `n` random configurations with an outcome drawn per unit.
fn random_case(g: Arc<DependencyGraph>, n: usize, fail_p: f64, seed: u64) -> (BuildDag, Vec<bool>) {
    let mut rng = seeding::stream(seed, "case");
    let configs: Vec<Configuration> = (0..n).map(|_| random_configuration(&g, &mut rng)).collect();
    let dag = build_dag(g, &configs);
    use rand::Rng;
    let ok = (0..dag.len()).map(|_| !rng.random_bool(fail_p)).collect();
    (dag, ok)
}

fn check_schedule(dag: &BuildDag, report: &SimReport, workers: usize) -> Result<(), TestCaseError> {
    let mut finished: HashMap<usize, (f64, bool)> = HashMap::new();
    let mut running = 0usize;
    for ev in &report.events {
        match ev.kind {
            EventKind::Start => {
                for &d in &dag.units()[ev.unit].deps {
                    let (t, ok) = finished.get(&d).copied().unwrap_or((f64::INFINITY, false));
                    prop_assert!(ok && t <= ev.time, "unit started before dependency {} succeeded", d);
                }
                running += 1;
                prop_assert!(running <= workers);
            }
            EventKind::Finish => {
                running -= 1;
                finished.insert(ev.unit, (ev.time, ev.success.unwrap()));
            }
        }
    }
    Ok(())
}

proptest! {
    #[test]
    fn schedule_is_valid_and_statuses_partition(
        g in graph_strategy(5, 3), n in 1usize..15, p in 0.0f64..0.5, seed in any::<u64>(), workers in 1usize..5,
    ) {
        let (dag, ok) = random_case(g, n, p, seed);
        let report = simulate(&dag, |u, _| ok[u], workers, unit).unwrap();
        check_schedule(&dag, &report, workers)?;
        prop_assert_eq!(report.attempted + report.skipped, dag.len());
        prop_assert!(report.succeeded <= report.attempted);
        prop_assert_eq!(report.succeeded + report.failed + report.skipped, dag.len());
        for (u, status) in report.units.iter().map(|u| u.status).enumerate() {
            prop_assert!(matches!(status, NodeStatus::Succeeded | NodeStatus::Failed | NodeStatus::Skipped));
            let blocked = dag.units().iter().enumerate().any(|(v, _)| {
                report.units[v].status == NodeStatus::Failed && dag.transitive_dependents(v).contains(&u)
            });
            prop_assert_eq!(status == NodeStatus::Skipped, blocked);
        }
    }

    #[test]
    fn dag_units_are_unique(g in graph_strategy(5, 3), n in 1usize..20, seed in any::<u64>()) {
        let (dag, _) = random_case(g.clone(), n, 0.0, seed);
        let digests: std::collections::HashSet<_> = dag.units().iter().map(|u| u.digest).collect();
        prop_assert_eq!(digests.len(), dag.len());
        prop_assert_eq!(dag.origin().len(), n);
        prop_assert!(dag.len() <= n * g.len());
        // Configurations with equal assignments share their root unit.
        let (again, _) = random_case(g, n, 0.0, seed);
        prop_assert_eq!(again.origin(), dag.origin());
    }

    #[test]
    fn more_workers_never_slower(g in graph_strategy(7, 3), n in 1usize..30, p in 0.0f64..0.4, seed in any::<u64>(), w in 1usize..6) {
        let (dag, ok) = random_case(g, n, p, seed);
        let a = simulate(&dag, |u, _| ok[u], w, unit).unwrap();
        let b = simulate(&dag, |u, _| ok[u], w + 1, unit).unwrap();
        prop_assert!(b.makespan <= a.makespan, "{} workers: {}, {} workers: {}", w, a.makespan, w + 1, b.makespan);
        let statuses = |r: &SimReport| r.units.iter().map(|u| u.status).collect::<Vec<_>>();
        prop_assert_eq!(statuses(&a), statuses(&b));
    }

    #[test]
    fn serial_makespan_is_total_work(g in graph_strategy(5, 3), n in 1usize..12, p in 0.0f64..0.4, seed in any::<u64>()) {
        let (dag, ok) = random_case(g, n, p, seed);
        let serial = simulate(&dag, |u, _| ok[u], 1, unit).unwrap();
        let wide = simulate(&dag, |u, _| ok[u], dag.len(), unit).unwrap();
        prop_assert_eq!(serial.makespan, serial.attempted as f64);
        prop_assert_eq!(
            serial.units.iter().map(|u| u.status).collect::<Vec<_>>(),
            wide.units.iter().map(|u| u.status).collect::<Vec<_>>()
        );
    }
}

#[test]
fn synthetic_oracle_agrees_with_rule_reevaluation() {
    let spec = BenchmarkSpec {
        packages: 10,
        domain_sizes: DomainSizes::Range { min: 2, max: 4 },
        rule_density: 0.6,
        target_success_rate: 0.2,
        noise: 0.0,
        seed: 5,
    };
    let b = generate_benchmark(&spec).unwrap();
    let oracle = SyntheticOracle::new(Arc::clone(&b.graph), &b.rules, 0).unwrap();
    let g = &b.graph;
    let mut rng = seeding::stream(5, "agreement");
    for _ in 0..10_000 {
        let x = random_configuration(g, &mut rng);
        let labels = x.labels(g);
        let violated = b.rules.forbidden.iter().any(|r| labels[&r.parent] == r.parent_version && labels[&r.child] == r.child_version);
        assert_eq!(oracle.outcome(&x), !violated);
    }
}

#[test]
fn unit_outcomes_reproduce_configuration_outcomes() {
    let g = Arc::new(DependencyGraph::load(fixtures().join("chain.graph.json")).unwrap());
    let rules = PlantedRuleSet::load(fixtures().join("chain.rules.json")).unwrap();
    let oracle = SyntheticOracle::new(Arc::clone(&g), &rules, 0).unwrap();
    let configs: Vec<Configuration> = g.configurations().collect();
    let dag = build_dag(Arc::clone(&g), &configs);
    let report = simulate(&dag, |_, u| oracle.unit_outcome(&dag, u), 2, unit).unwrap();
    let simulated = configuration_outcomes(&dag, &report);
    let direct: Vec<bool> = configs.iter().map(|x| oracle.outcome(x)).collect();
    assert_eq!(simulated, direct);
}

#[test]
fn noisy_oracle_fails_about_as_often_as_requested() {
    let spec = BenchmarkSpec {
        packages: 6,
        domain_sizes: DomainSizes::Fixed(vec![4, 4, 4, 4, 4, 4]),
        rule_density: 1.0,
        target_success_rate: 1.0,
        noise: 0.3,
        seed: 1,
    };
    let b = generate_benchmark(&spec).unwrap();
    let oracle = SyntheticOracle::new(Arc::clone(&b.graph), &b.rules, 9).unwrap();
    let rate = oracle.success_rate().unwrap();
    // 4096 independent draws; 4 sd is about 0.03.
    assert!((rate - 0.7).abs() < 0.03, "{rate}");
}
