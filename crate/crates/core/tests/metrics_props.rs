mod common;

use std::collections::HashSet;
use std::sync::Arc;

use buildtune::configspace::{digest, random_configuration, DependencyGraph, Package};
use buildtune::dataset::{load_dataset, split_train_test, summarize, BuildRecord, Dataset};
use buildtune::metrics::{auprc, auprc_truncated, precision, recall, samples_to_full_recall, std_dev, trajectory};
use buildtune::seeding;
use common::history_strategy;
use proptest::prelude::*;

fn ranked(scores: &[f64], labels: &[bool]) -> Vec<(f64, bool)> {
    let mut items: Vec<(f64, bool)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    items.sort_by(|a, b| b.0.total_cmp(&a.0));
    items
}

fn brute_auprc(items: &[(f64, bool)]) -> f64 {
    let total = items.iter().filter(|i| i.1).count() as f64;
    (1..=items.len())
        .map(|k| {
            let tp = items[..k].iter().filter(|i| i.1).count() as f64;
            let gained = if items[k - 1].1 { 1.0 / total } else { 0.0 };
            tp / k as f64 * gained
        })
        .sum()
}

fn labeled() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (1usize..80).prop_flat_map(|n| {
        (
            prop::collection::hash_set(-1_000_000i64..1_000_000, n).prop_map(|s| s.into_iter().map(|v| v as f64 / 1000.0).collect::<Vec<_>>()),
            prop::collection::vec(any::<bool>(), n),
        )
    })
    .prop_filter("needs a positive", |(_, l)| l.iter().any(|b| *b))
}

proptest! {
    #[test]
    fn auprc_matches_brute_force((scores, labels) in labeled()) {
        let items = ranked(&scores, &labels);
        prop_assert!((auprc(&items).unwrap() - brute_auprc(&items)).abs() <= 1e-12);
    }

    #[test]
    fn auprc_invariant_to_monotone_transform((scores, labels) in labeled(), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let base = auprc(&ranked(&scores, &labels)).unwrap();
        let affine: Vec<f64> = scores.iter().map(|s| a * s + b).collect();
        let cubed: Vec<f64> = scores.iter().map(|s| s.powi(3)).collect();
        prop_assert_eq!(auprc(&ranked(&affine, &labels)).unwrap(), base);
        prop_assert_eq!(auprc(&ranked(&cubed, &labels)).unwrap(), base);
    }

    #[test]
    fn truncated_auprc_is_monotone_in_cutoff((scores, labels) in labeled(), c in 0.0f64..1.0) {
        let items = ranked(&scores, &labels);
        let part = auprc_truncated(&items, c).unwrap();
        prop_assert!(part <= auprc(&items).unwrap() + 1e-12);
        prop_assert!(part <= c + 1e-12);
    }

    #[test]
    fn trajectory_agrees_with_prefix_metrics((_, recs) in history_strategy(3, 3, 40)) {
        prop_assume!(!recs.is_empty());
        let good = recs.iter().filter(|r| r.built).count();
        let traj = trajectory(&recs, Some(good));
        for (k, point) in traj.iter().enumerate() {
            prop_assert_eq!(point.precision, precision(&recs[..=k]).unwrap());
            if good > 0 {
                prop_assert_eq!(point.recall.unwrap(), recall(&recs[..=k], good).unwrap());
            }
        }
        if good > 0 {
            let n = samples_to_full_recall(&recs, good).unwrap();
            prop_assert_eq!(traj[n - 1].recall, Some(1.0));
        }
    }

    #[test]
    fn split_is_a_partition(n in 1usize..200, f in 0.05f64..0.95, seed in any::<u64>()) {
        let g = Arc::new(DependencyGraph::new(
            "r",
            vec![Package::new("r", (0..20).map(|i| i.to_string())), Package::new("d", (0..10).map(|i| i.to_string()))],
            &[("r", "d")],
        ).unwrap());
        let recs = g.configurations().take(n).enumerate().map(|(i, c)| BuildRecord::new(c, i % 3 == 0));
        let ds = Dataset::new(Arc::clone(&g), recs).unwrap();
        let (train, test) = split_train_test(&ds, f, &mut seeding::stream(seed, "split")).unwrap();
        prop_assert_eq!(train.len(), ((f * n as f64) + 0.5).floor() as usize);
        prop_assert_eq!(train.len() + test.len(), n);
        let a: HashSet<_> = train.digests().iter().collect();
        let b: HashSet<_> = test.digests().iter().collect();
        prop_assert!(a.is_disjoint(&b));
        let all: HashSet<_> = ds.digests().iter().collect();
        prop_assert_eq!(a.union(&b).copied().collect::<HashSet<_>>(), all);
    }

    #[test]
    fn dataset_round_trips_through_files((g, recs) in history_strategy(5, 4, 40)) {
        let mut seen = HashSet::new();
        let unique: Vec<BuildRecord> = recs.into_iter().filter(|r| seen.insert(digest(&g, &r.config))).collect();
        let ds = Dataset::new(Arc::clone(&g), unique).unwrap();
        let dir = tempfile::tempdir().unwrap();
        g.save(dir.path().join("g.json")).unwrap();
        ds.save(dir.path().join("d.jsonl"), "g.json").unwrap();
        let back = load_dataset(dir.path().join("d.jsonl")).unwrap();
        prop_assert_eq!(back.records(), ds.records());
        prop_assert_eq!(back.digests(), ds.digests());
    }
}

#[test]
fn sample_sd_of_constant_values_is_zero() {
    assert_eq!(std_dev(&[0.81; 5]), 0.0);
    assert!((std_dev(&[1.0, 2.0, 3.0, 4.0]) - 1.2909944487358056).abs() < 1e-15);
}

/// Summary of a dataset shaped like a published abyss campaign: 892
/// configurations, 133 builds, 36 dependencies.
#[test]
fn abyss_shaped_summary() {
    let mut packages = vec![Package::new("abyss", ["2.3.1", "2.3.5"])];
    let mut edges = Vec::new();
    for i in 0..36 {
        packages.push(Package::new(format!("dep{i:02}"), ["a", "b"]));
        edges.push(("abyss".to_string(), format!("dep{i:02}")));
    }
    let edge_refs: Vec<(&str, &str)> = edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let g = Arc::new(DependencyGraph::new("abyss", packages, &edge_refs).unwrap());
    let mut rng = seeding::stream(3, "abyss");
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    while records.len() < 892 {
        let x = random_configuration(&g, &mut rng);
        if seen.insert(digest(&g, &x)) {
            let built = records.len() < 133;
            records.push(BuildRecord::new(x, built));
        }
    }
    let ds = Dataset::new(Arc::clone(&g), records).unwrap();
    let dir = tempfile::tempdir().unwrap();
    g.save(dir.path().join("abyss.graph.json")).unwrap();
    ds.save(dir.path().join("abyss.jsonl"), "abyss.graph.json").unwrap();
    let s = summarize(&load_dataset(dir.path().join("abyss.jsonl")).unwrap());
    assert_eq!((s.configs, s.good, s.deps), (892, 133, 36));
    assert!((s.success_rate() - 133.0 / 892.0).abs() < 1e-15);
    let text = s.to_string();
    assert!(text.contains("892") && text.contains("133") && text.contains("36"));
}
