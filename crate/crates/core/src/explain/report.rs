use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::filter::{independence_filter, DEFAULT_ALPHA};
use super::{amie_all, nonzero_set, Threshold};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::{classify_false_positive, classify_roles, CausalDag, FalsePositiveCase, RoleConfig, RoleKind};
use crate::learn::{ModelKind, ProbModel};

/// Bumped whenever a field of [`AmieReport`] or [`FeatureRecord`] changes.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReportOptions {
    pub threshold: Threshold,
    pub alpha: f64,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub roles: RoleConfig,
}

impl ReportOptions {
    pub fn for_model(kind: ModelKind) -> Self {
        Self { threshold: Threshold::default_for(kind), alpha: DEFAULT_ALPHA, roles: RoleConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureRecord {
    pub index: usize,
    pub name: String,
    pub amie: f64,
    /// 1-based position by `|amie|` descending, ties by index.
    pub abs_rank: usize,
    pub nonzero: bool,
    pub chi_square: f64,
    pub marginal_p_value: f64,
    pub degenerate: bool,
    /// Non-zero but marginally independent of the outcome.
    pub filtered: bool,
    pub defined_rows: usize,
    pub true_role: Option<RoleKind>,
    pub role_witness: Option<usize>,
    pub fp_case: Option<FalsePositiveCase>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AmieReport {
    pub schema_version: u32,
    pub model: ModelKind,
    pub features: Vec<FeatureRecord>,
    /// Feature indices ordered by rank.
    pub ranking: Vec<usize>,
    pub eval_row_count: usize,
    /// Rows excluded from some feature's average for an undefined prediction.
    pub undefined_rows: usize,
    pub threshold: Threshold,
    /// Absolute cut-off the threshold resolved to.
    pub epsilon: f64,
    pub alpha: f64,
}

impl AmieReport {
    pub fn amies(&self) -> Vec<f64> {
        self.features.iter().map(|f| f.amie).collect()
    }

    pub fn nonzero(&self) -> Vec<usize> {
        self.features.iter().filter(|f| f.nonzero).map(|f| f.index).collect()
    }

    /// Non-zero features that survive the independence filter.
    pub fn kept(&self) -> Vec<usize> {
        self.features.iter().filter(|f| f.nonzero && !f.filtered).map(|f| f.index).collect()
    }

    /// Features whose annotated role is causal; empty without a truth graph.
    pub fn truth(&self) -> Vec<usize> {
        self.features.iter().filter(|f| f.true_role.is_some_and(RoleKind::is_causal)).map(|f| f.index).collect()
    }

    pub fn top(&self, k: usize) -> &[usize] {
        &self.ranking[..k.min(self.ranking.len())]
    }
}

/// Order of features by `|value|` descending with ties broken by index.
pub fn abs_ranking(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b].abs().partial_cmp(&values[a].abs()).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    order
}

/// Computes AMIEs on `eval`, thresholds and filters them, and when a truth
/// graph is given annotates roles and false-positive cases.
///
/// Feature `k` of the data corresponds to the `k`-th observed non-outcome node
/// of the graph.
pub fn build_report(
    model: &dyn ProbModel,
    eval: &Dataset,
    options: &ReportOptions,
    truth: Option<&CausalDag>,
) -> Result<AmieReport> {
    options.threshold.validate()?;
    let m = eval.n_features();
    let nodes = match truth {
        Some(dag) => {
            let nodes = dag.feature_nodes();
            if nodes.len() != m {
                return Err(Error::InvalidArgument(format!("truth graph has {} features, data has {m}", nodes.len())));
            }
            Some(nodes)
        }
        None => None,
    };
    let amies = amie_all(model, eval)?;
    let values: Vec<f64> = amies.iter().map(|a| a.value).collect();
    let epsilon = options.threshold.cutoff(&values);
    let nonzero = nonzero_set(&values, options.threshold);
    let all: Vec<usize> = (0..m).collect();
    let tests = independence_filter(eval, &all, options.alpha)?;
    let ranking = abs_ranking(&values);
    let roles = truth.map(|dag| classify_roles(dag, options.roles));

    let mut features = Vec::with_capacity(m);
    for k in 0..m {
        let is_nonzero = nonzero.binary_search(&k).is_ok();
        let (mut true_role, mut role_witness, mut fp_case) = (None, None, None);
        if let (Some(dag), Some(roles), Some(nodes)) = (truth, &roles, &nodes) {
            let node = nodes[k];
            let role = roles.get(node);
            true_role = Some(role.map_or(RoleKind::Other, |r| r.kind));
            role_witness = role.and_then(|r| r.witness);
            if is_nonzero && true_role == Some(RoleKind::Other) {
                fp_case = Some(classify_false_positive(dag, roles, node)?);
            }
        }
        features.push(FeatureRecord {
            index: k,
            name: eval.feature_names()[k].clone(),
            amie: values[k],
            abs_rank: 0,
            nonzero: is_nonzero,
            chi_square: tests[k].test.statistic,
            marginal_p_value: tests[k].test.p_value,
            degenerate: tests[k].test.degenerate,
            filtered: is_nonzero && tests[k].filtered,
            defined_rows: amies[k].defined_rows,
            true_role,
            role_witness,
            fp_case,
        });
    }
    for (pos, &k) in ranking.iter().enumerate() {
        features[k].abs_rank = pos + 1;
    }
    Ok(AmieReport {
        schema_version: REPORT_SCHEMA_VERSION,
        model: model.kind(),
        features,
        ranking,
        eval_row_count: eval.n_rows(),
        undefined_rows: amies.iter().map(|a| a.undefined_rows).max().unwrap_or(0),
        threshold: options.threshold,
        epsilon,
        alpha: options.alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::split;
    use crate::synth::{generate_dag, random_cpts, sample, GenConfig, OracleModel};
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn ranking_ties_by_index() {
        assert_eq!(abs_ranking(&[0.1, -0.3, 0.3, 0.0]), vec![1, 2, 0, 3]);
    }

    #[test]
    fn oracle_on_no_latent_world_recovers_parents() {
        let cfg = GenConfig { total_nodes: 10, edge_ratio: 1.5, seed: 21, ..GenConfig::default() };
        let dag = generate_dag(&cfg).unwrap();
        let net = random_cpts(&dag, &cfg).unwrap();
        let data = split(&sample(&net, 2000, 1).unwrap().data, 0.7, 2).unwrap();
        let oracle = OracleModel::new(net).unwrap();
        let report =
            build_report(&oracle, &data.test(), &ReportOptions::for_model(ModelKind::Oracle), Some(&dag)).unwrap();
        let parents: Vec<usize> = dag.parents(dag.outcome()).to_vec();
        // features are nodes 0..n-1 in order when nothing is latent
        assert_eq!(report.truth(), parents);
        assert_eq!(report.nonzero(), parents);
        // rank is a permutation
        let mut ranks: Vec<usize> = report.features.iter().map(|f| f.abs_rank).collect();
        ranks.sort_unstable();
        assert_eq!(ranks, (1..=report.features.len()).collect::<Vec<_>>());
        for f in &report.features {
            assert!(!f.filtered || f.nonzero);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn report_invariants(seed in 0u64..10_000) {
            let cfg = GenConfig { total_nodes: 8, edge_ratio: 1.5, seed, ..GenConfig::default() };
            let dag = generate_dag(&cfg).unwrap();
            let net = random_cpts(&dag, &cfg).unwrap();
            let data = sample(&net, 300, seed).unwrap().data;
            let oracle = OracleModel::new(net).unwrap();
            let report = build_report(&oracle, &data, &ReportOptions::for_model(ModelKind::Oracle), Some(&dag)).unwrap();
            let mut seen = vec![false; report.features.len()];
            for &k in &report.ranking {
                prop_assert!(!seen[k]);
                seen[k] = true;
            }
            for w in report.ranking.windows(2) {
                prop_assert!(report.features[w[0]].amie.abs() >= report.features[w[1]].amie.abs());
            }
            for f in &report.features {
                prop_assert!(!f.filtered || f.nonzero);
            }
        }
    }
}
