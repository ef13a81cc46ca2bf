use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::BayesNet;
use crate::error::{Error, Result};
use crate::learn::{ModelKind, ProbModel};

/// Largest number of unobserved nodes (including the outcome) the oracle will
/// enumerate.
pub const MAX_HIDDEN: usize = 22;

/// Exact `P(Y = 1 | observed features)` of a binary network.
///
/// Only the latent nodes are summed out. Factors that mention neither a
/// latent node nor the outcome cancel between numerator and denominator, so
/// the cost depends on the latent count rather than the network size.
#[derive(Debug, Clone)]
pub struct OracleModel {
    net: BayesNet,
    features: Vec<usize>,
    latents: Vec<usize>,
    /// Nodes whose factor involves a latent: the latents themselves and
    /// observed children of latents. The outcome is handled separately.
    factors: Vec<usize>,
}

impl OracleModel {
    pub fn new(net: BayesNet) -> Result<Self> {
        let dag = net.dag();
        let latents = dag.latent_nodes();
        if latents.len() + 1 > MAX_HIDDEN {
            return Err(Error::EnumerationBound { hidden: latents.len() + 1, limit: MAX_HIDDEN });
        }
        let y = dag.outcome();
        let factors = (0..dag.node_count())
            .filter(|&v| v != y && (!dag.is_observed(v) || dag.parents(v).iter().any(|&p| !dag.is_observed(p))))
            .collect();
        Ok(Self { features: dag.feature_nodes(), net, latents, factors })
    }

    pub fn net(&self) -> &BayesNet {
        &self.net
    }

    /// Node index of each feature column.
    pub fn feature_nodes(&self) -> &[usize] {
        &self.features
    }
}

impl ProbModel for OracleModel {
    fn predict(&self, x: &[u8]) -> Option<f64> {
        assert_eq!(x.len(), self.features.len(), "feature row arity");
        let dag = self.net.dag();
        let y = dag.outcome();
        let mut assignment = vec![0u8; dag.node_count()];
        for (&node, &value) in self.features.iter().zip(x) {
            assignment[node] = value;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for config in 0u64..1 << self.latents.len() {
            for (k, &u) in self.latents.iter().enumerate() {
                assignment[u] = ((config >> k) & 1) as u8;
            }
            let weight: f64 = self.factors.iter().map(|&v| self.net.factor(v, &assignment)).product();
            if weight == 0.0 {
                continue;
            }
            den += weight;
            num += weight * self.net.p_one(y, &assignment);
        }
        (den > 0.0).then(|| (num / den).clamp(0.0, 1.0))
    }

    fn feature_count(&self) -> usize {
        self.features.len()
    }

    fn kind(&self) -> ModelKind {
        ModelKind::Oracle
    }
}

/// Exact conditional by summing the full joint; exponential in the node count.
pub fn brute_force_conditional(net: &BayesNet, x: &[u8]) -> Result<Option<f64>> {
    let dag = net.dag();
    let n = dag.node_count();
    if n > 20 {
        return Err(Error::InvalidArgument(format!("{n} nodes is too many for the full joint")));
    }
    let features = dag.feature_nodes();
    let (mut num, mut den) = (0.0, 0.0);
    let mut assignment = vec![0u8; n];
    for config in 0u64..1 << n {
        for (v, slot) in assignment.iter_mut().enumerate() {
            *slot = ((config >> v) & 1) as u8;
        }
        if features.iter().zip(x).any(|(&f, &xv)| assignment[f] != xv) {
            continue;
        }
        let p = net.joint(&assignment);
        den += p;
        if assignment[dag.outcome()] == 1 {
            num += p;
        }
    }
    Ok((den > 0.0).then(|| num / den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::CausalDag;
    use crate::synth::{generate_dag, mask_latents, random_cpts, GenConfig, LatentMode};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn direct_table_read() {
        let dag = CausalDag::from_edges(2, &[(0, 1)], 1, &[]).unwrap();
        let net = BayesNet::new(dag, vec![vec![0.4], vec![0.2, 0.9]]).unwrap();
        let oracle = OracleModel::new(net).unwrap();
        assert_eq!(oracle.predict(&[1]), Some(0.9));
        assert_eq!(oracle.predict(&[0]), Some(0.2));
    }

    #[test]
    fn marginalizes_confounder() {
        // U -> X, U -> Y
        let dag = CausalDag::from_edges(3, &[(0, 1), (0, 2)], 2, &[0]).unwrap();
        let (pu, px, py) = (0.3, [0.2, 0.7], [0.1, 0.8]);
        let net = BayesNet::new(dag, vec![vec![pu], px.to_vec(), py.to_vec()]).unwrap();
        let oracle = OracleModel::new(net).unwrap();
        // hand enumeration over u
        let w1 = pu * px[1];
        let w0 = (1.0 - pu) * px[0];
        let expected = (w1 * py[1] + w0 * py[0]) / (w1 + w0);
        assert_relative_eq!(oracle.predict(&[1]).unwrap(), expected, epsilon = 1e-15);
    }

    #[test]
    fn impossible_condition_is_undefined() {
        let dag = CausalDag::from_edges(3, &[(0, 1), (0, 2)], 2, &[0]).unwrap();
        let net = BayesNet::new(dag, vec![vec![0.5], vec![0.0, 0.0], vec![0.1, 0.8]]).unwrap();
        let oracle = OracleModel::new(net).unwrap();
        assert_eq!(oracle.predict(&[1]), None);
        assert!(oracle.predict(&[0]).is_some());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn matches_full_joint(seed in 0u64..100_000, l in 0usize..4, x_bits in 0u32..1024) {
            let cfg = GenConfig {
                total_nodes: 9,
                edge_ratio: 1.5,
                latent_count: l,
                latent_mode: LatentMode::ConnectedOnly,
                seed,
                ..GenConfig::default()
            };
            let dag = mask_latents(&generate_dag(&cfg).unwrap(), &cfg).unwrap();
            let net = random_cpts(&dag, &cfg).unwrap();
            let oracle = OracleModel::new(net.clone()).unwrap();
            let x: Vec<u8> = (0..oracle.feature_count()).map(|k| ((x_bits >> k) & 1) as u8).collect();
            let fast = oracle.predict(&x).unwrap();
            let slow = brute_force_conditional(&net, &x).unwrap().unwrap();
            prop_assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
        }
    }
}
