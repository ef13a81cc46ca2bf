//! Model intervention effects and the causal machinery needed to interpret them.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! * [`graph`]: causal DAGs with observed/latent marks, d-separation, latent
//!   role taxonomy (activators, proxies, standalone latent causes), inducing
//!   paths and false-positive case analysis.
//! * [`synth`]: random DAG worlds, latent masking, random CPTs, ancestral
//!   sampling and the exact-inference oracle model.
//! * [`data`]: the feature table, one-hot encoding and train/test splits.
//! * [`network`]: multi-level discrete Bayesian networks (parsed from files by
//!   the companion crate).
//! * [`learn`]: the probability-model interface, logistic regression and a
//!   random forest, accuracy and permutation importance.
//! * [`explain`]: MIE/AMIE estimation, non-zero decisions, the marginal
//!   chi-square filter, consistency metrics and ranked reports.
#![no_std]

extern crate alloc;

pub mod data;
pub mod error;
pub mod explain;
pub mod graph;
pub mod learn;
pub mod network;
pub mod seed;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::data::{Dataset, LevelTable, Split};
    pub use crate::error::{Error, Result};
    pub use crate::explain::{amie, amie_all, build_report, mie, AmieReport, Threshold};
    pub use crate::graph::{CausalDag, FalsePositiveCase, FeatureRole, RoleConfig, RoleKind};
    pub use crate::learn::{ModelKind, ProbModel};
    pub use crate::synth::{BayesNet, GenConfig, LatentMode, OracleModel};
}
