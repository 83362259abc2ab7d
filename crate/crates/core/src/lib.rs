//! Adaptive sampling of high-fidelity build configurations.
//!
//! A configuration assigns one version to every package of a dependency
//! graph. Given a costly build oracle, the sampler fits a factorized
//! surrogate over observed successes and failures and proposes the next
//! configuration to try by expected improvement.
//!
//! ```
//! use std::sync::Arc;
//! use buildtune::configspace::{DependencyGraph, Package};
//!
//! let graph = DependencyGraph::new(
//!     "app",
//!     vec![Package::new("app", ["1.0", "2.0"]), Package::new("zlib", ["1.2", "1.3"])],
//!     &[("app", "zlib")],
//! )
//! .unwrap();
//! assert_eq!(graph.space_size_u64(), Some(4));
//! let _shared = Arc::new(graph);
//! ```

pub mod analysis;
pub mod buildsim;
pub mod cli;
pub mod configspace;
pub mod dataset;
pub mod metrics;
pub mod sampler;
pub mod seeding;
pub mod surrogate;
