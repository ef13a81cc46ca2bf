use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::CausalDag;
use crate::error::{Error, Result};

/// Orientation of the edge between two consecutive path nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Arrow {
    /// `nodes[k] -> nodes[k + 1]`
    Forward,
    /// `nodes[k] <- nodes[k + 1]`
    Backward,
}

/// A simple path with explicit arrowheads, so collider conditions can be
/// re-checked without consulting the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WitnessPath {
    pub nodes: Vec<usize>,
    pub arrows: Vec<Arrow>,
}

impl WitnessPath {
    /// Reads orientations off the graph; consecutive nodes must be adjacent.
    pub fn from_nodes(dag: &CausalDag, nodes: Vec<usize>) -> Self {
        let arrows = nodes
            .windows(2)
            .map(|w| {
                if dag.has_edge(w[0], w[1]) {
                    Arrow::Forward
                } else {
                    debug_assert!(dag.has_edge(w[1], w[0]));
                    Arrow::Backward
                }
            })
            .collect();
        Self { nodes, arrows }
    }

    /// Whether the intermediate node at position `k` has both arrowheads
    /// pointing into it.
    pub fn is_collider_at(&self, k: usize) -> bool {
        k > 0 && k + 1 < self.nodes.len() && self.arrows[k - 1] == Arrow::Forward && self.arrows[k] == Arrow::Backward
    }
}

/// Exemption used by relaxed inducing paths: an observed node that is a child
/// of an unobserved ancestor of the outcome, i.e. it shares that latent
/// ancestor with the outcome and sits directly beneath it.
pub fn is_relaxed_exempt(dag: &CausalDag, node: usize, outcome_ancestors: &[bool]) -> bool {
    dag.parents(node).iter().any(|&u| !dag.is_observed(u) && outcome_ancestors[u])
}

/// Searches for an inducing path between `x` and the outcome.
///
/// Every observed intermediate node must be a collider on the path and a
/// strict ancestor of the outcome; unobserved intermediates are
/// unconstrained. With `relaxed`, observed colliders accepted by
/// [`is_relaxed_exempt`] may skip the ancestor requirement.
///
/// The search runs over `(node, entered through an arrowhead)` states. Any
/// walk satisfying the local conditions can be loop-erased into a simple path
/// that still satisfies them, so reachability decides existence.
pub fn has_inducing_path(dag: &CausalDag, x: usize, relaxed: bool) -> Result<Option<WitnessPath>> {
    dag.check_node(x)?;
    let y = dag.outcome();
    if x == y {
        return Err(Error::InvalidArgument("source is the outcome".into()));
    }
    let n = dag.node_count();
    let anc_y = dag.outcome_ancestor_mask();
    let passable =
        |v: usize| -> bool { !dag.is_observed(v) || anc_y[v] || (relaxed && is_relaxed_exempt(dag, v, &anc_y)) };

    // state index = 2 * node + (entered through arrowhead as 1)
    let mut prev: Vec<Option<usize>> = vec![None; 2 * n];
    let mut seen = vec![false; 2 * n];
    let mut queue = VecDeque::new();
    let mut found = None;

    let push = |state: usize,
                from: Option<usize>,
                seen: &mut Vec<bool>,
                prev: &mut Vec<Option<usize>>,
                queue: &mut VecDeque<usize>| {
        if !seen[state] {
            seen[state] = true;
            prev[state] = from;
            queue.push_back(state);
        }
    };

    for &c in dag.children(x) {
        push(2 * c + 1, None, &mut seen, &mut prev, &mut queue);
    }
    for &p in dag.parents(x) {
        push(2 * p, None, &mut seen, &mut prev, &mut queue);
    }

    while let Some(state) = queue.pop_front() {
        let (v, head_in) = (state / 2, state % 2 == 1);
        if v == y {
            found = Some(state);
            break;
        }
        if dag.is_observed(v) {
            if !head_in || !passable(v) {
                continue;
            }
            // a collider leaves through another edge pointing into it
            for &p in dag.parents(v) {
                if p != x {
                    push(2 * p, Some(state), &mut seen, &mut prev, &mut queue);
                }
            }
        } else {
            for &c in dag.children(v) {
                if c != x {
                    push(2 * c + 1, Some(state), &mut seen, &mut prev, &mut queue);
                }
            }
            for &p in dag.parents(v) {
                if p != x {
                    push(2 * p, Some(state), &mut seen, &mut prev, &mut queue);
                }
            }
        }
    }

    let Some(mut state) = found else {
        return Ok(None);
    };
    let mut walk = vec![state / 2];
    while let Some(p) = prev[state] {
        walk.push(p / 2);
        state = p;
    }
    walk.push(x);
    walk.reverse();
    Ok(Some(WitnessPath::from_nodes(dag, loop_erase(walk))))
}

fn loop_erase(walk: Vec<usize>) -> Vec<usize> {
    let mut path: Vec<usize> = Vec::with_capacity(walk.len());
    for v in walk {
        if let Some(pos) = path.iter().position(|&u| u == v) {
            path.truncate(pos + 1);
        } else {
            path.push(v);
        }
    }
    path
}
