//! Reachability algorithms against exhaustive path enumeration.

use amie_core::graph::{classify_roles, d_separated, enumerate, has_inducing_path, CausalDag, RoleConfig, RoleKind};
use proptest::prelude::*;

/// Random DAG on up to 10 nodes: edges follow a random permutation so the
/// index order carries no information; the last node of the permutation is
/// the outcome and some non-outcome nodes are latent.
fn small_dag() -> impl Strategy<Value = CausalDag> {
    (3usize..=10)
        .prop_flat_map(|n| {
            let pairs = n * (n - 1) / 2;
            (
                Just(n),
                Just(()).prop_perturb(move |_, mut rng| {
                    let mut p: Vec<usize> = (0..n).collect();
                    for i in (1..n).rev() {
                        p.swap(i, rng.random_range(0..=i));
                    }
                    p
                }),
                proptest::collection::vec(proptest::bool::weighted(0.35), pairs),
                proptest::collection::vec(proptest::bool::weighted(0.3), n),
            )
        })
        .prop_map(|(n, perm, take, latent)| {
            let mut edges = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if take[k] {
                        edges.push((perm[i], perm[j]));
                    }
                    k += 1;
                }
            }
            let outcome = perm[n - 1];
            let latent: Vec<usize> = (0..n).filter(|&v| v != outcome && latent[v]).collect();
            CausalDag::from_edges(n, &edges, outcome, &latent).unwrap()
        })
}

fn conditioning_set(dag: &CausalDag, x: usize, y: usize, bits: u16) -> Vec<usize> {
    (0..dag.node_count()).filter(|&v| v != x && v != y && (bits >> v) & 1 == 1).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn dsep_matches_enumeration(dag in small_dag(), x in 0usize..10, y in 0usize..10, bits in any::<u16>()) {
        let n = dag.node_count();
        let (x, y) = (x % n, y % n);
        prop_assume!(x != y);
        let z = conditioning_set(&dag, x, y, bits);
        let fast = d_separated(&dag, x, y, &z).unwrap();
        prop_assert_eq!(fast, enumerate::d_separated(&dag, x, y, &z).unwrap());
        prop_assert_eq!(fast, d_separated(&dag, y, x, &z).unwrap());
    }

    #[test]
    fn adjacent_nodes_never_separated(dag in small_dag(), bits in any::<u16>()) {
        for (u, v) in dag.edges() {
            let z = conditioning_set(&dag, u, v, bits);
            prop_assert!(!d_separated(&dag, u, v, &z).unwrap());
        }
    }

    #[test]
    fn inducing_matches_enumeration(dag in small_dag(), relaxed in any::<bool>()) {
        let anc = dag.outcome_ancestor_mask();
        for x in dag.feature_nodes() {
            let fast = has_inducing_path(&dag, x, relaxed).unwrap();
            let slow = enumerate::inducing_paths(&dag, x, relaxed).unwrap();
            prop_assert_eq!(fast.is_some(), !slow.is_empty());
            if let Some(path) = fast {
                // the witness itself satisfies the definition
                prop_assert!(enumerate::path_is_inducing(&dag, &path.nodes, relaxed));
                prop_assert_eq!(path.nodes[0], x);
                prop_assert_eq!(*path.nodes.last().unwrap(), dag.outcome());
                for k in 1..path.nodes.len() - 1 {
                    let v = path.nodes[k];
                    if dag.is_observed(v) {
                        prop_assert!(path.is_collider_at(k));
                        prop_assert!(anc[v] || relaxed);
                    }
                }
            }
        }
    }

    #[test]
    fn roles_without_latents_are_parents(dag in small_dag()) {
        let dag = dag.with_latents(&[]).unwrap();
        let roles = classify_roles(&dag, RoleConfig::default());
        for x in dag.feature_nodes() {
            let kind = roles.kind(x).unwrap();
            prop_assert!(matches!(kind, RoleKind::DirectCause | RoleKind::Other));
        }
        prop_assert_eq!(roles.nodes_with(RoleKind::DirectCause), dag.parents(dag.outcome()).to_vec());
    }
}
