//! Dependency importance and version-pair compatibility derived from a
//! fitted [`FactorModel`].

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::surrogate::{ei_from_log_ratio, FactorModel};

pub const DEFAULT_CONSTRAINT_THRESHOLD: f64 = 0.25;
const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("distributions have different support sizes ({0} vs {1})")]
    SupportMismatch(usize, usize),
    #[error("distribution is not normalized (sum = {0})")]
    NotNormalized(f64),
    #[error("distribution has a negative or non-finite entry")]
    InvalidEntry,
    #[error("no edge {parent} -> {child} in the dependency graph")]
    UnknownEdge { parent: String, child: String },
    #[error("threshold must lie in [0, 1], got {0}")]
    BadThreshold(f64),
}

fn check_distribution(p: &[f64]) -> Result<(), AnalysisError> {
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(AnalysisError::InvalidEntry);
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(AnalysisError::NotNormalized(sum));
    }
    Ok(())
}

/// `sum_x p(x) ln(p(x) / m(x))`, skipping zero-mass terms of `p`.
pub fn kl_divergence(p: &[f64], m: &[f64]) -> f64 {
    p.iter()
        .zip(m)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, mi)| pi * (pi / mi).ln())
        .sum()
}

/// Jensen-Shannon divergence in nats, bounded by `ln 2`.
pub fn js_divergence(p: &[f64], q: &[f64]) -> Result<f64, AnalysisError> {
    if p.len() != q.len() {
        return Err(AnalysisError::SupportMismatch(p.len(), q.len()));
    }
    check_distribution(p)?;
    check_distribution(q)?;
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    let js = 0.5 * kl_divergence(p, &m) + 0.5 * kl_divergence(q, &m);
    Ok(js.clamp(0.0, std::f64::consts::LN_2))
}

fn normalized(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ImportanceTarget {
    Package { name: String },
    Edge { parent: String, child: String },
}

impl fmt::Display for ImportanceTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImportanceTarget::Package { name } => f.write_str(name),
            ImportanceTarget::Edge { parent, child } => write!(f, "{parent}+{child}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub target: ImportanceTarget,
    pub score: f64,
}

/// Ranks packages and edges by the JS divergence between their good and bad
/// factors, largest first, ties broken by label.
pub fn importance_ranking(model: &FactorModel, top_k: usize) -> Vec<ImportanceEntry> {
    let g = model.graph();
    let js = |a: &[f64], b: &[f64]| {
        js_divergence(&normalized(a), &normalized(b)).expect("fitted factors are valid distributions")
    };
    let mut entries: Vec<ImportanceEntry> = (0..g.len())
        .map(|i| ImportanceEntry {
            target: ImportanceTarget::Package {
                name: g.name(i).to_string(),
            },
            score: js(model.good().node_factor(i), model.bad().node_factor(i)),
        })
        .chain(g.edges().iter().enumerate().map(|(e, &(p, c))| ImportanceEntry {
            target: ImportanceTarget::Edge {
                parent: g.name(p).to_string(),
                child: g.name(c).to_string(),
            },
            score: js(model.good().edge_factor(e), model.bad().edge_factor(e)),
        }))
        .collect();
    entries.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.target.to_string().cmp(&b.target.to_string()))
    });
    entries.truncate(top_k);
    entries
}

/// `target,score` rows.
pub fn importance_csv(entries: &[ImportanceEntry]) -> String {
    let mut out = String::from("target,score\n");
    for e in entries {
        out.push_str(&format!("{},{}\n", e.target, e.score));
    }
    out
}

/// EI restricted to one edge's factors for every (parent, child) version pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityMatrix {
    pub parent: String,
    pub child: String,
    pub parent_versions: Vec<String>,
    pub child_versions: Vec<String>,
    pub alpha: f64,
    /// `cells[u][w]` for parent version `u` and child version `w`.
    pub cells: Vec<Vec<f64>>,
}

impl CompatibilityMatrix {
    pub fn max_cell(&self) -> f64 {
        self.cells.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Header row of child versions, one row per parent version.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\\{}", self.parent, self.child);
        for w in &self.child_versions {
            out.push(',');
            out.push_str(w);
        }
        out.push('\n');
        for (u, row) in self.parent_versions.iter().zip(&self.cells) {
            out.push_str(u);
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

pub fn pair_compatibility(model: &FactorModel, parent: &str, child: &str) -> Result<CompatibilityMatrix, AnalysisError> {
    let g = model.graph();
    let unknown = || AnalysisError::UnknownEdge {
        parent: parent.to_string(),
        child: child.to_string(),
    };
    let p = g.package_index(parent).ok_or_else(unknown)?;
    let c = g.package_index(child).ok_or_else(unknown)?;
    let e = g.edge_index(p, c).ok_or_else(unknown)?;
    let (mp, mc) = (g.domain_size(p), g.domain_size(c));
    let good = model.good().edge_factor(e);
    let bad = model.bad().edge_factor(e);
    let cells = (0..mp)
        .map(|u| {
            (0..mc)
                .map(|w| {
                    let k = u * mc + w;
                    ei_from_log_ratio(model.alpha(), bad[k].ln() - good[k].ln())
                })
                .collect()
        })
        .collect();
    Ok(CompatibilityMatrix {
        parent: parent.to_string(),
        child: child.to_string(),
        parent_versions: g.versions(p).to_vec(),
        child_versions: g.versions(c).to_vec(),
        alpha: model.alpha(),
        cells,
    })
}

/// A version pair flagged as unlikely to build together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub parent: String,
    pub parent_version: String,
    pub child: String,
    pub child_version: String,
    pub ei: f64,
}

/// Pairs whose score is strictly below `threshold * max_cell`.
pub fn extract_constraints(matrix: &CompatibilityMatrix, threshold: f64) -> Result<Vec<Constraint>, AnalysisError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(AnalysisError::BadThreshold(threshold));
    }
    let cut = threshold * matrix.max_cell();
    let mut out = Vec::new();
    for (u, row) in matrix.cells.iter().enumerate() {
        for (w, &ei) in row.iter().enumerate() {
            if ei < cut {
                out.push(Constraint {
                    parent: matrix.parent.clone(),
                    parent_version: matrix.parent_versions[u].clone(),
                    child: matrix.child.clone(),
                    child_version: matrix.child_versions[w].clone(),
                    ei,
                });
            }
        }
    }
    Ok(out)
}
