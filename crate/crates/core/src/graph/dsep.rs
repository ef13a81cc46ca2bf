use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use super::CausalDag;
use crate::error::{Error, Result};

/// Whether `z` d-separates `x` from `y`.
///
/// Linear-time reachability over `(node, direction)` states: a state records
/// whether the trail entered the node from a child (travelling up) or from a
/// parent (travelling down). Colliders pass the trail only when they are in
/// `z` or have a descendant in `z`, i.e. when they belong to the ancestral
/// closure of `z`.
pub fn d_separated(dag: &CausalDag, x: usize, y: usize, z: &[usize]) -> Result<bool> {
    let n = dag.node_count();
    for &v in [x, y].iter().chain(z) {
        dag.check_node(v)?;
    }
    if x == y {
        return Err(Error::InvalidArgument("d-separation endpoints coincide".to_string()));
    }
    if z.contains(&x) || z.contains(&y) {
        return Err(Error::InvalidArgument("conditioning set contains an endpoint".to_string()));
    }

    let mut in_z = vec![false; n];
    for &v in z {
        in_z[v] = true;
    }
    let opens_collider = dag.ancestor_mask(z);

    const UP: usize = 0;
    const DOWN: usize = 1;
    let mut visited = vec![[false; 2]; n];
    let mut stack: Vec<(usize, usize)> = vec![(x, UP)];
    while let Some((v, dir)) = stack.pop() {
        if visited[v][dir] {
            continue;
        }
        visited[v][dir] = true;
        if v == y {
            return Ok(false);
        }
        if dir == UP {
            if !in_z[v] {
                stack.extend(dag.parents(v).iter().map(|&p| (p, UP)));
                stack.extend(dag.children(v).iter().map(|&c| (c, DOWN)));
            }
        } else {
            if !in_z[v] {
                stack.extend(dag.children(v).iter().map(|&c| (c, DOWN)));
            }
            if opens_collider[v] {
                stack.extend(dag.parents(v).iter().map(|&p| (p, UP)));
            }
        }
    }
    Ok(true)
}
