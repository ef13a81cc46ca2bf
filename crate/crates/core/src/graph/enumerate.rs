//! Exhaustive simple-path enumeration.
//!
//! These routines check the path-based definitions literally, one path at a
//! time. They exist to validate the reachability algorithms and are capped at
//! [`MAX_NODES`] nodes because path counts grow exponentially.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::inducing::is_relaxed_exempt;
use super::CausalDag;
use crate::error::{Error, Result};

pub const MAX_NODES: usize = 10;

fn check_size(dag: &CausalDag) -> Result<()> {
    if dag.node_count() > MAX_NODES {
        return Err(Error::InvalidArgument(format!(
            "path enumeration is limited to {MAX_NODES} nodes, graph has {}",
            dag.node_count()
        )));
    }
    Ok(())
}

/// Every simple path between `a` and `b` in the skeleton.
pub fn simple_paths(dag: &CausalDag, a: usize, b: usize) -> Result<Vec<Vec<usize>>> {
    check_size(dag)?;
    dag.check_node(a)?;
    dag.check_node(b)?;
    let mut out = Vec::new();
    let mut on_path = vec![false; dag.node_count()];
    let mut path = vec![a];
    on_path[a] = true;
    extend(dag, b, &mut path, &mut on_path, &mut out);
    Ok(out)
}

fn extend(dag: &CausalDag, target: usize, path: &mut Vec<usize>, on_path: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
    let last = *path.last().unwrap();
    if last == target {
        out.push(path.clone());
        return;
    }
    let neighbours: Vec<usize> = dag.parents(last).iter().chain(dag.children(last)).copied().collect();
    for next in neighbours {
        if on_path[next] {
            continue;
        }
        on_path[next] = true;
        path.push(next);
        extend(dag, target, path, on_path, out);
        path.pop();
        on_path[next] = false;
    }
}

fn is_collider(dag: &CausalDag, prev: usize, mid: usize, next: usize) -> bool {
    dag.has_edge(prev, mid) && dag.has_edge(next, mid)
}

/// Whether `z` blocks the given path.
pub fn path_blocked(dag: &CausalDag, path: &[usize], z: &[usize]) -> bool {
    path.windows(3).any(|w| {
        let (prev, mid, next) = (w[0], w[1], w[2]);
        if is_collider(dag, prev, mid, next) {
            let desc = dag.descendants(mid).unwrap();
            !z.contains(&mid) && !desc.iter().any(|d| z.contains(d))
        } else {
            z.contains(&mid)
        }
    })
}

/// d-separation by checking that every simple path is blocked.
pub fn d_separated(dag: &CausalDag, x: usize, y: usize, z: &[usize]) -> Result<bool> {
    Ok(simple_paths(dag, x, y)?.iter().all(|p| path_blocked(dag, p, z)))
}

/// Whether a path from a feature to the outcome is inducing (or relaxed
/// inducing when `relaxed`).
pub fn path_is_inducing(dag: &CausalDag, path: &[usize], relaxed: bool) -> bool {
    let anc = dag.outcome_ancestor_mask();
    path.windows(3).all(|w| {
        let (prev, mid, next) = (w[0], w[1], w[2]);
        !dag.is_observed(mid)
            || (is_collider(dag, prev, mid, next) && (anc[mid] || (relaxed && is_relaxed_exempt(dag, mid, &anc))))
    })
}

/// All inducing paths from `x` to the outcome.
pub fn inducing_paths(dag: &CausalDag, x: usize, relaxed: bool) -> Result<Vec<Vec<usize>>> {
    Ok(simple_paths(dag, x, dag.outcome())?.into_iter().filter(|p| path_is_inducing(dag, p, relaxed)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diamond_has_two_paths() {
        let g = CausalDag::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3)], 3, &[]).unwrap();
        let paths = simple_paths(&g, 0, 3).unwrap();
        assert_eq!(paths.len(), 2);
        assert!(d_separated(&g, 0, 3, &[1, 2]).unwrap());
        assert!(!d_separated(&g, 0, 3, &[1]).unwrap());
    }

    #[test]
    fn refuses_large_graphs() {
        let g = CausalDag::from_edges(11, &[(0, 10)], 10, &[]).unwrap();
        assert!(simple_paths(&g, 0, 10).is_err());
    }
}
