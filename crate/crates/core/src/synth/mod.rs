//! Synthetic binary causal worlds.
//!
//! A world is built in three steps, each a pure function of the config and its
//! seed: [`generate_dag`], [`mask_latents`], [`random_cpts`]. Data then comes
//! from [`sample`] and the exact conditional model from [`OracleModel`].

mod generate;
mod oracle;

pub use generate::{generate_dag, mask_latents, random_cpts, MAX_RETRIES};
pub use oracle::{brute_force_conditional, OracleModel, MAX_HIDDEN};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::CausalDag;
use crate::seed;

/// Largest parent count for which a full binary table is materialized.
pub const MAX_PARENTS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LatentMode {
    #[default]
    None,
    /// Mark randomly chosen existing nodes as unobserved, never producing a
    /// standalone latent direct cause.
    ConnectedOnly,
    /// Add fresh latent roots, each with a single edge into the outcome.
    StandaloneDc,
}

impl LatentMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LatentMode::None => "none",
            LatentMode::ConnectedOnly => "connected",
            LatentMode::StandaloneDc => "standalone",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(LatentMode::None),
            "connected" | "connected-only" => Some(LatentMode::ConnectedOnly),
            "standalone" | "standalone-dc" => Some(LatentMode::StandaloneDc),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GenConfig {
    /// Node count including the outcome, before any standalone latents.
    pub total_nodes: usize,
    /// Edges per node; the edge count is `round(edge_ratio * total_nodes)`.
    pub edge_ratio: f64,
    pub latent_count: usize,
    pub latent_mode: LatentMode,
    /// CPT entries are drawn from `[cpt_margin, 1 - cpt_margin]`.
    pub cpt_margin: f64,
    /// Required maximum contrast of every parent in its child's table.
    pub min_effect: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            total_nodes: 40,
            edge_ratio: 2.0,
            latent_count: 0,
            latent_mode: LatentMode::None,
            cpt_margin: 0.1,
            min_effect: 0.05,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn edge_budget(&self) -> usize {
        libm::round(self.edge_ratio * self.total_nodes as f64) as usize
    }

    pub fn edge_capacity(&self) -> usize {
        self.total_nodes * self.total_nodes.saturating_sub(1) / 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_nodes < 2 {
            return Err(Error::InvalidArgument("a world needs at least two nodes".into()));
        }
        if !(self.edge_ratio.is_finite() && self.edge_ratio > 0.0) {
            return Err(Error::InvalidArgument(format!("edge ratio must be positive, got {}", self.edge_ratio)));
        }
        if self.edge_budget() > self.edge_capacity() {
            return Err(Error::EdgeCapacity { requested: self.edge_budget(), capacity: self.edge_capacity() });
        }
        if !(self.cpt_margin > 0.0 && self.cpt_margin < 0.5) {
            return Err(Error::InvalidArgument("cpt margin must lie in (0, 0.5)".into()));
        }
        if !(self.min_effect >= 0.0 && self.cpt_margin + self.min_effect < 0.5) {
            return Err(Error::InvalidArgument("min effect must be non-negative with margin + effect < 0.5".into()));
        }
        if self.latent_mode == LatentMode::ConnectedOnly && self.latent_count >= self.total_nodes - 1 {
            return Err(Error::InvalidArgument(format!(
                "{} latents leave no observed feature among {} nodes",
                self.latent_count, self.total_nodes
            )));
        }
        Ok(())
    }
}

/// Binary Bayesian network: a DAG plus `P(node = 1 | parents)` tables.
///
/// Table rows follow the ascending parent list of the DAG with the first
/// parent as the lowest bit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BayesNet {
    dag: CausalDag,
    tables: Vec<Vec<f64>>,
}

impl BayesNet {
    pub fn new(dag: CausalDag, tables: Vec<Vec<f64>>) -> Result<Self> {
        if tables.len() != dag.node_count() {
            return Err(Error::InvalidGraph(format!("{} tables for {} nodes", tables.len(), dag.node_count())));
        }
        for (v, t) in tables.iter().enumerate() {
            let k = dag.parents(v).len();
            if k > MAX_PARENTS {
                return Err(Error::InvalidGraph(format!(
                    "`{}` has {k} parents, above the table limit {MAX_PARENTS}",
                    dag.label(v)
                )));
            }
            if t.len() != 1 << k {
                return Err(Error::InvalidGraph(format!(
                    "`{}` has {} rows, expected {}",
                    dag.label(v),
                    t.len(),
                    1usize << k
                )));
            }
            if let Some(p) = t.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidGraph(format!("`{}` has probability {p} outside [0, 1]", dag.label(v))));
            }
        }
        Ok(Self { dag, tables })
    }

    pub fn dag(&self) -> &CausalDag {
        &self.dag
    }

    pub fn table(&self, node: usize) -> &[f64] {
        &self.tables[node]
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.tables
    }

    /// Row of `node`'s table selected by a full assignment.
    #[inline]
    pub fn row_index(&self, node: usize, assignment: &[u8]) -> usize {
        self.dag.parents(node).iter().enumerate().fold(0, |acc, (k, &p)| acc | ((assignment[p] as usize) << k))
    }

    #[inline]
    pub fn p_one(&self, node: usize, assignment: &[u8]) -> f64 {
        self.tables[node][self.row_index(node, assignment)]
    }

    /// Probability of `node` taking its value in `assignment`.
    #[inline]
    pub fn factor(&self, node: usize, assignment: &[u8]) -> f64 {
        let p = self.p_one(node, assignment);
        if assignment[node] == 1 {
            p
        } else {
            1.0 - p
        }
    }

    /// Joint probability of a full assignment.
    pub fn joint(&self, assignment: &[u8]) -> f64 {
        (0..self.dag.node_count()).map(|v| self.factor(v, assignment)).product()
    }

    /// Same tables over a DAG with different observed marks.
    pub fn with_dag(&self, dag: CausalDag) -> Result<Self> {
        if dag.edges() != self.dag.edges() {
            return Err(Error::InvalidArgument("replacement DAG changes the edge set".into()));
        }
        Self::new(dag, self.tables.clone())
    }
}

/// Samples with latent columns kept alongside the emitted dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    /// Observed features and outcome.
    pub data: Dataset,
    pub latent_nodes: Vec<usize>,
    /// Row-major values of `latent_nodes`.
    pub latent_values: Vec<u8>,
}

/// Ancestral sampling of `n` rows.
pub fn sample(net: &BayesNet, n: usize, seed_value: u64) -> Result<Sampled> {
    let dag = net.dag();
    let nodes = dag.node_count();
    let features = dag.feature_nodes();
    let latent_nodes = dag.latent_nodes();
    let y = dag.outcome();
    let mut rng = seed::rng(seed_value, &[seed::stream::SAMPLE]);

    let mut values = Vec::with_capacity(n * features.len());
    let mut outcome = Vec::with_capacity(n);
    let mut latent_values = Vec::with_capacity(n * latent_nodes.len());
    let mut assignment = vec![0u8; nodes];
    for _ in 0..n {
        for &v in dag.topological_order() {
            let p = net.p_one(v, &assignment);
            assignment[v] = u8::from(rng.gen::<f64>() < p);
        }
        values.extend(features.iter().map(|&f| assignment[f]));
        latent_values.extend(latent_nodes.iter().map(|&u| assignment[u]));
        outcome.push(assignment[y]);
    }
    let names = features.iter().map(|&f| dag.label(f).into()).collect();
    Ok(Sampled { data: Dataset::binary(names, values, outcome)?, latent_nodes, latent_values })
}
