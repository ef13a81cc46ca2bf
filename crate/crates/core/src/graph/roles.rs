//! The latent-role taxonomy and the false-positive case analysis.
//!
//! Roles follow the one-hop patterns: an observed feature is an *activator*
//! when it is a parent of a latent parent of the outcome, a *proxy* when it
//! is a child of one. A latent parent of the outcome with no observed parent
//! and no observed child besides the outcome is *standalone*.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::inducing::{has_inducing_path, WitnessPath};
use super::CausalDag;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RoleKind {
    DirectCause,
    Activator,
    Proxy,
    StandaloneUnobservedDc,
    Other,
}

impl RoleKind {
    /// Roles whose features are expected to carry a non-zero AMIE.
    pub fn is_causal(self) -> bool {
        matches!(self, Self::DirectCause | Self::Activator | Self::Proxy)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::DirectCause => "direct_cause",
            Self::Activator => "activator",
            Self::Proxy => "proxy",
            Self::StandaloneUnobservedDc => "standalone_unobserved_dc",
            Self::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureRole {
    pub kind: RoleKind,
    /// For activators and proxies: the latent parent of the outcome involved.
    pub witness: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RoleConfig {
    /// Also count `X -> U1 -> ... -> Uk -> Y` (all `Ui` latent) as activation.
    pub chain_activators: bool,
}

/// Role assignment for every node of a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roles {
    primary: Vec<Option<FeatureRole>>,
    matches: Vec<Vec<FeatureRole>>,
}

impl Roles {
    /// Highest-priority role (`DirectCause > Activator > Proxy`). `None` for
    /// the outcome and for latent nodes that are not standalone causes.
    pub fn get(&self, node: usize) -> Option<FeatureRole> {
        self.primary[node]
    }

    pub fn kind(&self, node: usize) -> Option<RoleKind> {
        self.primary[node].map(|r| r.kind)
    }

    /// Every pattern the node matches, in priority order.
    pub fn all(&self, node: usize) -> &[FeatureRole] {
        &self.matches[node]
    }

    pub fn matches(&self, node: usize, kind: RoleKind) -> bool {
        self.matches[node].iter().any(|r| r.kind == kind)
    }

    /// Nodes whose primary role is `kind`, ascending.
    pub fn nodes_with(&self, kind: RoleKind) -> Vec<usize> {
        (0..self.primary.len()).filter(|&v| self.kind(v) == Some(kind)).collect()
    }

    /// Observed features expected to have non-zero AMIE.
    pub fn causal_features(&self) -> Vec<usize> {
        (0..self.primary.len()).filter(|&v| self.kind(v).is_some_and(RoleKind::is_causal)).collect()
    }

    pub fn has_standalone(&self) -> bool {
        self.primary.iter().any(|r| matches!(r, Some(FeatureRole { kind: RoleKind::StandaloneUnobservedDc, .. })))
    }
}

pub fn classify_roles(dag: &CausalDag, config: RoleConfig) -> Roles {
    let n = dag.node_count();
    let y = dag.outcome();
    let latent_dc: Vec<bool> = (0..n).map(|v| !dag.is_observed(v) && dag.has_edge(v, y)).collect();

    // Latent nodes with an all-latent directed route into a latent parent of
    // the outcome; `reach[v]` names the parent reached first.
    let mut reach: Vec<Option<usize>> = (0..n).map(|v| latent_dc[v].then_some(v)).collect();
    if config.chain_activators {
        for &v in dag.topological_order().iter().rev() {
            if dag.is_observed(v) || reach[v].is_some() {
                continue;
            }
            reach[v] = dag.children(v).iter().filter(|&&c| !dag.is_observed(c)).find_map(|&c| reach[c]);
        }
    }

    let mut primary = vec![None; n];
    let mut matches = vec![Vec::new(); n];
    for v in 0..n {
        if v == y {
            continue;
        }
        if dag.is_observed(v) {
            let found = &mut matches[v];
            if dag.has_edge(v, y) {
                found.push(FeatureRole { kind: RoleKind::DirectCause, witness: None });
            }
            if let Some(u) = dag.children(v).iter().filter(|&&c| !dag.is_observed(c)).find_map(|&c| reach[c]) {
                found.push(FeatureRole { kind: RoleKind::Activator, witness: Some(u) });
            }
            if let Some(&u) = dag.parents(v).iter().find(|&&p| latent_dc[p]) {
                found.push(FeatureRole { kind: RoleKind::Proxy, witness: Some(u) });
            }
            if found.is_empty() {
                found.push(FeatureRole { kind: RoleKind::Other, witness: None });
            }
            primary[v] = Some(found[0]);
        } else if latent_dc[v] {
            let observed_parent = dag.parents(v).iter().any(|&p| dag.is_observed(p));
            let observed_child = dag.children(v).iter().any(|&c| c != y && dag.is_observed(c));
            if !observed_parent && !observed_child {
                let role = FeatureRole { kind: RoleKind::StandaloneUnobservedDc, witness: None };
                matches[v].push(role);
                primary[v] = Some(role);
            }
        }
    }
    Roles { primary, matches }
}

/// Why a feature without a causal role can still show a non-zero AMIE.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FalsePositiveCase {
    /// Case 1: the feature is a parent of a proxy.
    ParentOfProxy {
        proxy: usize,
    },
    /// Case 2: the feature and a proxy share a latent ancestor.
    SharedUnobservedAncestorWithProxy {
        ancestor: usize,
        proxy: usize,
    },
    /// Case 3: an inducing (or relaxed inducing) path reaches the outcome.
    InducingPath {
        path: WitnessPath,
        relaxed: bool,
    },
    Unexplained,
}

impl FalsePositiveCase {
    pub fn case_number(&self) -> Option<u8> {
        match self {
            Self::ParentOfProxy { .. } => Some(1),
            Self::SharedUnobservedAncestorWithProxy { .. } => Some(2),
            Self::InducingPath { .. } => Some(3),
            Self::Unexplained => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ParentOfProxy { .. } => "case1_parent_of_proxy",
            Self::SharedUnobservedAncestorWithProxy { .. } => "case2_shared_unobserved_ancestor",
            Self::InducingPath { relaxed: false, .. } => "case3_inducing_path",
            Self::InducingPath { relaxed: true, .. } => "case3_relaxed_inducing_path",
            Self::Unexplained => "unexplained",
        }
    }
}

/// Checks the three false-positive cases in order for a feature whose role
/// is `Other`; calling it on a feature with a causal role is a contract error.
pub fn classify_false_positive(dag: &CausalDag, roles: &Roles, x: usize) -> Result<FalsePositiveCase> {
    dag.check_node(x)?;
    match roles.kind(x) {
        Some(RoleKind::Other) => {}
        other => {
            return Err(Error::Contract(format!(
                "false-positive analysis needs a feature with role Other, `{}` has {:?}",
                dag.label(x),
                other
            )))
        }
    }
    // proxies by primary role: a direct cause that also matches the proxy
    // pattern counts as a direct cause
    let proxies = roles.nodes_with(RoleKind::Proxy);

    if let Some(&proxy) = dag.children(x).iter().find(|c| proxies.contains(c)) {
        return Ok(FalsePositiveCase::ParentOfProxy { proxy });
    }

    let x_anc = dag.ancestor_mask(&[x]);
    for &proxy in &proxies {
        let p_anc = dag.ancestor_mask(&[proxy]);
        if let Some(ancestor) =
            (0..dag.node_count()).find(|&u| u != x && u != proxy && !dag.is_observed(u) && x_anc[u] && p_anc[u])
        {
            return Ok(FalsePositiveCase::SharedUnobservedAncestorWithProxy { ancestor, proxy });
        }
    }

    if let Some(path) = has_inducing_path(dag, x, false)? {
        return Ok(FalsePositiveCase::InducingPath { path, relaxed: false });
    }
    if let Some(path) = has_inducing_path(dag, x, true)? {
        return Ok(FalsePositiveCase::InducingPath { path, relaxed: true });
    }
    Ok(FalsePositiveCase::Unexplained)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEFAULT: RoleConfig = RoleConfig { chain_activators: false };

    #[test]
    fn activator_pattern() {
        // X_i -> U_i -> Y
        let g = CausalDag::from_edges(3, &[(0, 1), (1, 2)], 2, &[1]).unwrap();
        let roles = classify_roles(&g, DEFAULT);
        assert_eq!(roles.get(0), Some(FeatureRole { kind: RoleKind::Activator, witness: Some(1) }));
        assert_eq!(roles.get(1), None);
    }

    #[test]
    fn proxy_pattern() {
        // U_i -> X_i, U_i -> Y
        let g = CausalDag::from_edges(3, &[(1, 0), (1, 2)], 2, &[1]).unwrap();
        let roles = classify_roles(&g, DEFAULT);
        assert_eq!(roles.get(0), Some(FeatureRole { kind: RoleKind::Proxy, witness: Some(1) }));
    }

    #[test]
    fn standalone_latent_cause() {
        let g = CausalDag::from_edges(3, &[(1, 2), (0, 2)], 2, &[1]).unwrap();
        let roles = classify_roles(&g, DEFAULT);
        assert_eq!(roles.kind(1), Some(RoleKind::StandaloneUnobservedDc));
        assert_eq!(roles.kind(0), Some(RoleKind::DirectCause));
        assert!(roles.has_standalone());
    }

    #[test]
    fn priority_and_full_match_set() {
        // X0 -> Y, X0 -> U1 -> Y, U2 -> X0, U2 -> Y
        let g = CausalDag::from_edges(4, &[(0, 3), (0, 1), (1, 3), (2, 0), (2, 3)], 3, &[1, 2]).unwrap();
        let roles = classify_roles(&g, DEFAULT);
        assert_eq!(roles.kind(0), Some(RoleKind::DirectCause));
        let kinds: Vec<RoleKind> = roles.all(0).iter().map(|r| r.kind).collect();
        assert_eq!(kinds, vec![RoleKind::DirectCause, RoleKind::Activator, RoleKind::Proxy]);
    }

    #[test]
    fn chain_activators_behind_switch() {
        // X0 -> U1 -> U2 -> Y
        let g = CausalDag::from_edges(4, &[(0, 1), (1, 2), (2, 3)], 3, &[1, 2]).unwrap();
        assert_eq!(classify_roles(&g, DEFAULT).kind(0), Some(RoleKind::Other));
        let chained = classify_roles(&g, RoleConfig { chain_activators: true });
        assert_eq!(chained.get(0), Some(FeatureRole { kind: RoleKind::Activator, witness: Some(2) }));
    }

    #[test]
    fn case_one_parent_of_proxy() {
        // X_j -> X_i <- U_i -> Y
        let g = CausalDag::from_edges(4, &[(0, 1), (2, 1), (2, 3)], 3, &[2]).unwrap();
        let roles = classify_roles(&g, DEFAULT);
        assert_eq!(classify_false_positive(&g, &roles, 0).unwrap(), FalsePositiveCase::ParentOfProxy { proxy: 1 });
    }

    #[test]
    fn case_two_shared_latent_ancestor() {
        // X_j <- U_j -> X_i <- U_i -> Y
        let (xj, uj, xi, ui, y) = (0, 1, 2, 3, 4);
        let g = CausalDag::from_edges(5, &[(uj, xj), (uj, xi), (ui, xi), (ui, y)], y, &[uj, ui]).unwrap();
        let roles = classify_roles(&g, DEFAULT);
        assert_eq!(
            classify_false_positive(&g, &roles, xj).unwrap(),
            FalsePositiveCase::SharedUnobservedAncestorWithProxy { ancestor: uj, proxy: xi }
        );
    }

    #[test]
    fn case_three_inducing_path() {
        // X_j -> X_m <- U -> Y, X_m -> Y
        let g = CausalDag::from_edges(4, &[(0, 1), (2, 1), (2, 3), (1, 3)], 3, &[2]).unwrap();
        let roles = classify_roles(&g, DEFAULT);
        // X_m matches the proxy pattern but its primary role is direct cause
        assert_eq!(roles.kind(1), Some(RoleKind::DirectCause));
        match classify_false_positive(&g, &roles, 0).unwrap() {
            FalsePositiveCase::InducingPath { path, relaxed } => {
                assert!(!relaxed);
                assert_eq!(path.nodes, vec![0, 1, 2, 3]);
            }
            other => panic!("expected case 3, got {other:?}"),
        }
    }

    #[test]
    fn case_three_when_collider_is_not_a_proxy() {
        // X_j -> X_m <- U1 -> U2 -> Y, X_m -> Y, plus X_a -> U2 so U2 is not standalone
        let (xj, xm, u1, u2, xa, y) = (0, 1, 2, 3, 4, 5);
        let g = CausalDag::from_edges(6, &[(xj, xm), (u1, xm), (u1, u2), (u2, y), (xm, y), (xa, u2)], y, &[u1, u2])
            .unwrap();
        let roles = classify_roles(&g, DEFAULT);
        assert_eq!(roles.kind(xj), Some(RoleKind::Other));
        match classify_false_positive(&g, &roles, xj).unwrap() {
            FalsePositiveCase::InducingPath { path, relaxed } => {
                assert!(!relaxed);
                assert_eq!(path.nodes, vec![xj, xm, u1, u2, y]);
            }
            other => panic!("expected case 3, got {other:?}"),
        }
    }

    #[test]
    fn causal_role_is_a_contract_error() {
        let g = CausalDag::from_edges(2, &[(0, 1)], 1, &[]).unwrap();
        let roles = classify_roles(&g, DEFAULT);
        assert!(matches!(classify_false_positive(&g, &roles, 0), Err(Error::Contract(_))));
    }

    #[test]
    fn isolated_feature_is_unexplained() {
        let g = CausalDag::from_edges(3, &[(0, 2)], 2, &[]).unwrap();
        let roles = classify_roles(&g, DEFAULT);
        assert_eq!(classify_false_positive(&g, &roles, 1).unwrap(), FalsePositiveCase::Unexplained);
    }
}
