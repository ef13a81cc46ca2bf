//! Causal DAGs over observed and unobserved variables.
//!
//! A [`CausalDag`] holds the structural ground truth of a world: nodes with an
//! observed/latent mark, directed edges and a designated outcome that has no
//! descendants. Everything else in this module is a pure query over it.

mod dsep;
pub mod enumerate;
mod inducing;
mod roles;

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::error::{Error, Result};

pub use dsep::d_separated;
pub use inducing::{has_inducing_path, is_relaxed_exempt, Arrow, WitnessPath};
pub use roles::{classify_false_positive, classify_roles, FalsePositiveCase, FeatureRole, RoleConfig, RoleKind, Roles};

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CausalDag {
    labels: Vec<String>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    observed: Vec<bool>,
    outcome: usize,
    order: Vec<usize>,
}

/// Topological order of the graph on `node_count` nodes with the given edges.
///
/// Ties are broken by ascending node index. A cycle is reported through one
/// of the edges lying on it.
pub fn topological_order(node_count: usize, edges: &[(usize, usize)]) -> Result<Vec<usize>> {
    let mut indegree = vec![0usize; node_count];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); node_count];
    for &(u, v) in edges {
        check_index(u, node_count)?;
        check_index(v, node_count)?;
        out[u].push(v);
        indegree[v] += 1;
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        indegree.iter().enumerate().filter(|(_, &d)| d == 0).map(|(i, _)| Reverse(i)).collect();
    let mut order = Vec::with_capacity(node_count);
    while let Some(Reverse(u)) = ready.pop() {
        order.push(u);
        for &v in &out[u] {
            indegree[v] -= 1;
            if indegree[v] == 0 {
                ready.push(Reverse(v));
            }
        }
    }
    if order.len() == node_count {
        return Ok(order);
    }

    // Every unplaced node still has an unplaced parent; walking parents
    // backwards must revisit a node, and the last step closes a cycle.
    let mut parent_of: Vec<Option<usize>> = vec![None; node_count];
    for &(u, v) in edges {
        if indegree[u] > 0 && indegree[v] > 0 && parent_of[v].is_none() {
            parent_of[v] = Some(u);
        }
    }
    let start = (0..node_count).find(|&v| indegree[v] > 0).unwrap();
    let mut seen = vec![false; node_count];
    let mut v = start;
    loop {
        seen[v] = true;
        let u = parent_of[v].expect("blocked node has a blocked parent");
        if seen[u] {
            return Err(Error::Cycle { from: u, to: v });
        }
        v = u;
    }
}

fn check_index(index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(Error::NodeOutOfRange { index, len })
    }
}

impl CausalDag {
    /// Builds a DAG and checks every structural invariant: unique labels,
    /// acyclicity, an observed outcome without children.
    pub fn new(labels: Vec<String>, edges: &[(usize, usize)], observed: Vec<bool>, outcome: usize) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no nodes".to_string()));
        }
        if observed.len() != n {
            return Err(Error::InvalidGraph(format!("{} observation flags for {} nodes", observed.len(), n)));
        }
        check_index(outcome, n)?;
        let mut sorted_labels: Vec<&str> = labels.iter().map(String::as_str).collect();
        sorted_labels.sort_unstable();
        if let Some(w) = sorted_labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!("duplicate node label `{}`", w[0])));
        }

        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(u, v) in edges {
            check_index(u, n)?;
            check_index(v, n)?;
            if u == v {
                return Err(Error::Cycle { from: u, to: v });
            }
            parents[v].push(u);
            children[u].push(v);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        let order = topological_order(n, edges)?;
        if !children[outcome].is_empty() {
            return Err(Error::InvalidGraph(format!("outcome `{}` has children", labels[outcome])));
        }
        if !observed[outcome] {
            return Err(Error::InvalidGraph("outcome must be observed".to_string()));
        }
        Ok(Self { labels, parents, children, observed, outcome, order })
    }

    /// Graph with default labels `X0, X1, ...` and `Y` for the outcome, all
    /// nodes observed except those listed in `latent`.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize)], outcome: usize, latent: &[usize]) -> Result<Self> {
        let labels = (0..node_count)
            .map(|i| {
                if i == outcome {
                    "Y".to_string()
                } else if latent.contains(&i) {
                    format!("U{i}")
                } else {
                    format!("X{i}")
                }
            })
            .collect();
        let mut observed = vec![true; node_count];
        for &u in latent {
            check_index(u, node_count)?;
            observed[u] = false;
        }
        Self::new(labels, edges, observed, outcome)
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    /// All edges as `(parent, child)`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::with_capacity(self.edge_count());
        for (u, ch) in self.children.iter().enumerate() {
            edges.extend(ch.iter().map(|&v| (u, v)));
        }
        edges
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> &str {
        &self.labels[node]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn outcome(&self) -> usize {
        self.outcome
    }

    pub fn is_observed(&self, node: usize) -> bool {
        self.observed[node]
    }

    pub fn observed_flags(&self) -> &[bool] {
        &self.observed
    }

    pub fn parents(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.children[from].binary_search(&to).is_ok()
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    /// Observed non-outcome nodes in index order; these are the feature
    /// columns of any dataset sampled from the graph.
    pub fn feature_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&v| self.observed[v] && v != self.outcome).collect()
    }

    pub fn latent_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&v| !self.observed[v]).collect()
    }

    pub fn check_node(&self, node: usize) -> Result<()> {
        check_index(node, self.node_count())
    }

    /// Nodes with a directed path into `node`, excluding `node`, ascending.
    pub fn ancestors(&self, node: usize) -> Result<Vec<usize>> {
        self.check_node(node)?;
        let mask = self.ancestor_mask(&[node]);
        Ok((0..self.node_count()).filter(|&v| v != node && mask[v]).collect())
    }

    /// Nodes reachable from `node` along directed edges, excluding `node`.
    pub fn descendants(&self, node: usize) -> Result<Vec<usize>> {
        self.check_node(node)?;
        let mut mask = vec![false; self.node_count()];
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            for &c in &self.children[v] {
                if !mask[c] {
                    mask[c] = true;
                    stack.push(c);
                }
            }
        }
        Ok((0..self.node_count()).filter(|&v| mask[v]).collect())
    }

    /// Membership mask of `seeds` together with all their ancestors.
    pub fn ancestor_mask(&self, seeds: &[usize]) -> Vec<bool> {
        let mut mask = vec![false; self.node_count()];
        let mut stack: Vec<usize> = Vec::with_capacity(seeds.len());
        for &s in seeds {
            if !mask[s] {
                mask[s] = true;
                stack.push(s);
            }
        }
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if !mask[p] {
                    mask[p] = true;
                    stack.push(p);
                }
            }
        }
        mask
    }

    /// Strict ancestors of the outcome as a membership mask.
    pub fn outcome_ancestor_mask(&self) -> Vec<bool> {
        let mut mask = self.ancestor_mask(&[self.outcome]);
        mask[self.outcome] = false;
        mask
    }

    /// Same structure with a new set of latent nodes.
    pub fn with_latents(&self, latent: &[usize]) -> Result<Self> {
        let mut observed = vec![true; self.node_count()];
        for &u in latent {
            self.check_node(u)?;
            observed[u] = false;
        }
        Self::new(self.labels.clone(), &self.edges(), observed, self.outcome)
    }
}
