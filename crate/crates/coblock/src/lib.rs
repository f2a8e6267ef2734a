//! Bipartite co-clustering by greedy maximization of the exact integrated
//! complete likelihood of a latent blockmodel.
//!
//! Rows and columns of a data matrix are partitioned simultaneously; block
//! parameters and label proportions are integrated out under conjugate
//! priors, so the objective is exact at every (K, G) and the number of
//! clusters on each side falls out of the optimization instead of being
//! picked by a separate selection step.
//!
//! The pieces:
//! - [`matrix::BipartiteAdjacency`]: the observed matrix, dense or sparse,
//!   for Bernoulli, categorical, Poisson, or Gaussian cells.
//! - [`icl::IclState`]: the objective plus O(G) move deltas, merge deltas,
//!   and full conditionals over cached block statistics.
//! - [`search`]: greedy label sweeps with merge passes, optional candidate
//!   pruning, and multi-restart selection.
//! - [`sim`]: sampling from the generative model, for benchmarks and
//!   recovery studies.
//! - [`metrics`]: normalized mutual information between partitions.
//! - [`oracle`]: slow independent evaluations (quadrature, exhaustive
//!   search) that everything fast is tested against.

pub mod blocks;
pub mod error;
pub mod heatmap;
pub mod icl;
pub mod matrix;
pub mod metrics;
pub mod model;
mod numeric;
pub mod oracle;
pub mod partition;
pub mod report;
pub mod search;
pub mod sim;
pub mod study;

#[cfg(test)]
mod testutil;

pub use blocks::{log_block_marginal, BlockStats, StatsTable};
pub use error::{Error, Result};
pub use icl::{log_label_prior, IclState};
pub use matrix::BipartiteAdjacency;
pub use metrics::{combined_nmi, nmi};
pub use model::{ModelKind, PriorConfig};
pub use partition::{Partition, Side};
pub use report::FitReport;
pub use search::{fit, FitResult, SearchConfig, TracePoint};
pub use sim::GeneratorSpec;
