//! Model intervention effects.
//!
//! `MIE(i, x) = f(x with x_i = 1) - f(x with x_i = 0)` for a model `f` of
//! `P(Y = 1 | x)`, and `AMIE(i)` is its mean over an evaluation set. Each
//! effect costs two model queries; [`amie_all`] memoizes query rows so rows
//! shared between features are evaluated once.

mod filter;
mod report;

pub use filter::{independence_filter, FilterDecision, DEFAULT_ALPHA};
pub use report::{abs_ranking, build_report, AmieReport, FeatureRecord, ReportOptions, REPORT_SCHEMA_VERSION};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learn::{ModelKind, ProbModel};
use crate::stats::pairwise_sum;

/// Effect of toggling feature `i` from 0 to 1 at `x`; `None` when either arm
/// is undefined.
pub fn mie(model: &dyn ProbModel, x: &[u8], i: usize) -> Result<Option<f64>> {
    check_arity(model, x.len(), i)?;
    let mut row = x.to_vec();
    row[i] = 1;
    let on = model.predict(&row);
    row[i] = 0;
    let off = model.predict(&row);
    Ok(on.zip(off).map(|(a, b)| a - b))
}

fn check_arity(model: &dyn ProbModel, width: usize, i: usize) -> Result<()> {
    if width != model.feature_count() {
        return Err(Error::InvalidArgument(format!(
            "row has {width} features, model expects {}",
            model.feature_count()
        )));
    }
    if i >= width {
        return Err(Error::NodeOutOfRange { index: i, len: width });
    }
    Ok(())
}

/// AMIE of one feature with the rows it was averaged over.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Amie {
    pub value: f64,
    pub defined_rows: usize,
    pub undefined_rows: usize,
}

fn finish(feature: usize, effects: &[f64], undefined: usize) -> Result<Amie> {
    if effects.is_empty() {
        return Err(Error::AllUndefined(feature));
    }
    Ok(Amie {
        value: pairwise_sum(effects) / effects.len() as f64,
        defined_rows: effects.len(),
        undefined_rows: undefined,
    })
}

/// AMIE of feature `i` over every row of `eval`.
pub fn amie(model: &dyn ProbModel, eval: &Dataset, i: usize) -> Result<Amie> {
    if eval.is_empty() {
        return Err(Error::EmptyData);
    }
    check_arity(model, eval.n_features(), i)?;
    let mut effects = Vec::with_capacity(eval.n_rows());
    let mut undefined = 0;
    for row in eval.rows() {
        match mie(model, row, i)? {
            Some(e) => effects.push(e),
            None => undefined += 1,
        }
    }
    finish(i, &effects, undefined)
}

/// Memoizing model front end keyed by the full query row.
struct QueryCache<'m> {
    model: &'m dyn ProbModel,
    seen: BTreeMap<Vec<u8>, Option<f64>>,
    queries: usize,
}

impl QueryCache<'_> {
    fn get(&mut self, row: &[u8]) -> Option<f64> {
        self.queries += 1;
        if let Some(&p) = self.seen.get(row) {
            return p;
        }
        let p = self.model.predict(row);
        self.seen.insert(row.to_vec(), p);
        p
    }
}

/// AMIE of every feature, with query rows memoized across rows and features.
///
/// Produces the same values as calling [`amie`] per feature: the per-row
/// effects are identical and are summed in the same order.
pub fn amie_all(model: &dyn ProbModel, eval: &Dataset) -> Result<Vec<Amie>> {
    amie_all_counted(model, eval).map(|(a, _)| a)
}

/// [`amie_all`] plus the number of (memoized) model queries issued, which is
/// always `2 * rows * features`.
pub fn amie_all_counted(model: &dyn ProbModel, eval: &Dataset) -> Result<(Vec<Amie>, usize)> {
    if eval.is_empty() {
        return Err(Error::EmptyData);
    }
    let m = eval.n_features();
    if m != model.feature_count() {
        return Err(Error::InvalidArgument(format!("data has {m} features, model expects {}", model.feature_count())));
    }
    let mut cache = QueryCache { model, seen: BTreeMap::new(), queries: 0 };
    let mut effects: Vec<Vec<f64>> = (0..m).map(|_| Vec::with_capacity(eval.n_rows())).collect();
    let mut undefined = alloc::vec![0usize; m];
    let mut row = Vec::with_capacity(m);
    for x in eval.rows() {
        row.clear();
        row.extend_from_slice(x);
        for i in 0..m {
            let original = row[i];
            row[i] = 1;
            let on = cache.get(&row);
            row[i] = 0;
            let off = cache.get(&row);
            row[i] = original;
            match on.zip(off) {
                Some((a, b)) => effects[i].push(a - b),
                None => undefined[i] += 1,
            }
        }
    }
    let amies = (0..m).map(|i| finish(i, &effects[i], undefined[i])).collect::<Result<Vec<_>>>()?;
    Ok((amies, cache.queries))
}

/// Decision rule for calling an AMIE non-zero.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Threshold {
    /// `|AMIE| > epsilon`.
    Absolute(f64),
    /// `|AMIE| > fraction * max |AMIE|`.
    Relative(f64),
}

impl Threshold {
    pub const ORACLE_EPSILON: f64 = 1e-9;
    pub const TRAINED_EPSILON: f64 = 0.01;

    /// Default rule for a model: numerical noise only for the exact oracle,
    /// sampling noise for trained models.
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Oracle => Threshold::Absolute(Self::ORACLE_EPSILON),
            _ => Threshold::Absolute(Self::TRAINED_EPSILON),
        }
    }

    /// The absolute cut-off this rule amounts to for the given values.
    pub fn cutoff(&self, values: &[f64]) -> f64 {
        match *self {
            Threshold::Absolute(eps) => eps,
            Threshold::Relative(frac) => frac * values.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = match *self {
            Threshold::Absolute(v) | Threshold::Relative(v) => v,
        };
        if v.is_finite() && v >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("threshold must be non-negative, got {v}")))
        }
    }
}

/// Indices of values whose magnitude exceeds the threshold.
pub fn nonzero_set(values: &[f64], threshold: Threshold) -> Vec<usize> {
    let cut = threshold.cutoff(values);
    (0..values.len()).filter(|&i| values[i].abs() > cut).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Consistency {
    /// `|truth ∩ found| / |truth|`, the headline consistency.
    pub recall: f64,
    /// `|truth ∩ found| / |found|`, zero when nothing was found.
    pub precision: f64,
    pub f1: f64,
}

pub fn consistency(truth: &[usize], found: &[usize]) -> Result<Consistency> {
    let mut t = truth.to_vec();
    t.sort_unstable();
    t.dedup();
    let mut f = found.to_vec();
    f.sort_unstable();
    f.dedup();
    if t.is_empty() {
        return Err(Error::InvalidArgument("consistency needs a non-empty truth set".into()));
    }
    let hit = f.iter().filter(|v| t.binary_search(v).is_ok()).count() as f64;
    let recall = hit / t.len() as f64;
    let precision = if f.is_empty() { 0.0 } else { hit / f.len() as f64 };
    let f1 = if recall + precision > 0.0 { 2.0 * recall * precision / (recall + precision) } else { 0.0 };
    Ok(Consistency { recall, precision, f1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::CausalDag;
    use crate::learn::tests::Constant;
    use crate::synth::{BayesNet, OracleModel};
    use alloc::string::String;
    use alloc::vec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn names(m: usize) -> Vec<String> {
        (0..m).map(|j| format!("x{j}")).collect()
    }

    fn single_cause() -> OracleModel {
        let dag = CausalDag::from_edges(2, &[(0, 1)], 1, &[]).unwrap();
        OracleModel::new(BayesNet::new(dag, vec![vec![0.5], vec![0.2, 0.9]]).unwrap()).unwrap()
    }

    fn two_parents() -> OracleModel {
        // rows indexed x1 + 2 x2: 00, 10, 01, 11
        let dag = CausalDag::from_edges(3, &[(0, 2), (1, 2)], 2, &[]).unwrap();
        let table = vec![0.2, 0.6, 0.5, 0.9];
        OracleModel::new(BayesNet::new(dag, vec![vec![0.5], vec![0.3], table]).unwrap()).unwrap()
    }

    #[test]
    fn constant_effect_of_single_cause() {
        let oracle = single_cause();
        for x in [[0u8], [1]] {
            assert_relative_eq!(mie(&oracle, &x, 0).unwrap().unwrap(), 0.7, epsilon = 1e-15);
        }
        let d = Dataset::binary(names(1), vec![0, 1, 1, 0, 1], vec![0, 1, 1, 0, 0]).unwrap();
        assert_relative_eq!(amie(&oracle, &d, 0).unwrap().value, 0.7, epsilon = 1e-15);
    }

    #[test]
    fn two_parent_effect_is_constant() {
        let oracle = two_parents();
        // hand enumeration: 0.9 - 0.5 and 0.6 - 0.2
        for x2 in [0u8, 1] {
            assert_relative_eq!(mie(&oracle, &[0, x2], 0).unwrap().unwrap(), 0.4, epsilon = 1e-15);
        }
        let d = Dataset::binary(names(2), vec![0, 0, 1, 1, 1, 1, 0, 1], vec![0, 1, 1, 0]).unwrap();
        assert_relative_eq!(amie(&oracle, &d, 0).unwrap().value, 0.4, epsilon = 1e-15);
    }

    #[test]
    fn ignored_feature_has_zero_effect() {
        let d = Dataset::binary(names(2), vec![0, 1, 1, 0], vec![0, 1]).unwrap();
        assert_eq!(amie(&Constant(0.3, 2), &d, 1).unwrap().value, 0.0);
    }

    #[test]
    fn proxy_has_nonzero_effect() {
        // U -> X, U -> Y; marginalizing U gives P(Y | X) varying with X
        let dag = CausalDag::from_edges(3, &[(0, 1), (0, 2)], 2, &[0]).unwrap();
        let net = BayesNet::new(dag, vec![vec![0.4], vec![0.2, 0.7], vec![0.1, 0.8]]).unwrap();
        let oracle = OracleModel::new(net).unwrap();
        // P(Y=1|X=x) = sum_u P(Y=1|u) P(u|x)
        let pu1 = |x: u8| {
            let (a, b) = if x == 1 { (0.4 * 0.7, 0.6 * 0.2) } else { (0.4 * 0.3, 0.6 * 0.8) };
            a / (a + b)
        };
        let expected = (0.8 * pu1(1) + 0.1 * (1.0 - pu1(1))) - (0.8 * pu1(0) + 0.1 * (1.0 - pu1(0)));
        let d = Dataset::binary(names(1), vec![0, 1], vec![0, 1]).unwrap();
        let a = amie(&oracle, &d, 0).unwrap().value;
        assert_relative_eq!(a, expected, epsilon = 1e-14);
        assert!(a.abs() > 0.1);
    }

    #[test]
    fn all_undefined_is_an_error() {
        let dag = CausalDag::from_edges(3, &[(0, 1), (0, 2)], 2, &[0]).unwrap();
        let net = BayesNet::new(dag, vec![vec![0.5], vec![0.0, 0.0], vec![0.1, 0.8]]).unwrap();
        let oracle = OracleModel::new(net).unwrap();
        let d = Dataset::binary(names(1), vec![0, 1], vec![0, 1]).unwrap();
        assert_eq!(amie(&oracle, &d, 0), Err(Error::AllUndefined(0)));
    }

    #[test]
    fn thresholds() {
        assert_eq!(nonzero_set(&[0.7, 0.0], Threshold::Absolute(0.01)), vec![0]);
        assert_eq!(nonzero_set(&[0.40, 0.01], Threshold::Relative(0.05)), vec![0]);
        assert_eq!(nonzero_set(&[-0.2, 0.005], Threshold::Absolute(0.01)), vec![0]);
    }

    #[test]
    fn collider_graph_nonzero_set() {
        // X1 -> Y <- X2, isolated X3
        let dag = CausalDag::from_edges(4, &[(0, 3), (1, 3)], 3, &[]).unwrap();
        let net = BayesNet::new(dag, vec![vec![0.5], vec![0.5], vec![0.5], vec![0.2, 0.6, 0.3, 0.8]]).unwrap();
        let oracle = OracleModel::new(net).unwrap();
        let mut values = Vec::new();
        for k in 0..8u8 {
            values.extend([k & 1, (k >> 1) & 1, (k >> 2) & 1]);
        }
        let y = (0..8).map(|k| (k % 2) as u8).collect();
        let d = Dataset::binary(names(3), values, y).unwrap();
        let vals: Vec<f64> = amie_all(&oracle, &d).unwrap().iter().map(|a| a.value).collect();
        assert!(vals[2].abs() <= 1e-9);
        assert_eq!(nonzero_set(&vals, Threshold::Absolute(1e-9)), vec![0, 1]);
    }

    #[test]
    fn consistency_examples() {
        let c = consistency(&[0, 1], &[0, 2]).unwrap();
        assert_eq!((c.recall, c.precision), (0.5, 0.5));
        let c = consistency(&[3, 4], &[4, 3]).unwrap();
        assert_eq!((c.recall, c.precision, c.f1), (1.0, 1.0, 1.0));
        let c = consistency(&[3], &[3, 5]).unwrap();
        assert_eq!(c.recall, 1.0);
        assert!(c.precision < 1.0);
        assert_eq!(consistency(&[1], &[]).unwrap().precision, 0.0);
        assert!(consistency(&[], &[1]).is_err());
    }

    #[test]
    fn query_count_is_two_per_cell() {
        let oracle = two_parents();
        let d = Dataset::binary(names(2), vec![0, 0, 1, 1, 1, 0], vec![0, 1, 1]).unwrap();
        let (_, queries) = amie_all_counted(&oracle, &d).unwrap();
        assert_eq!(queries, 2 * 3 * 2);
    }

    fn random_logistic(weights: &[f64]) -> crate::learn::LogisticRegression {
        crate::learn::LogisticRegression {
            coefficients: weights.to_vec(),
            intercept: -0.2,
            standardized_coefficients: weights.to_vec(),
            epochs: 0,
            converged: true,
            final_gradient: 0.0,
            final_loss: 0.0,
            params: Default::default(),
        }
    }

    proptest! {
        #[test]
        fn memoized_matches_direct(
            weights in proptest::collection::vec(-2.0f64..2.0, 1..6),
            seed_rows in proptest::collection::vec(any::<u8>(), 1..40),
        ) {
            let m = weights.len();
            let model = random_logistic(&weights);
            let values: Vec<u8> = seed_rows
                .iter()
                .flat_map(|&r| (0..m).map(move |k| (r >> (k % 8)) & 1))
                .collect();
            let y = vec![0u8; seed_rows.len()];
            let d = Dataset::binary(names(m), values, y).unwrap();
            let fast = amie_all(&model, &d).unwrap();
            for (i, f) in fast.iter().enumerate() {
                prop_assert_eq!(*f, amie(&model, &d, i).unwrap());
            }
        }

        #[test]
        fn relabelling_negates_effects(
            weights in proptest::collection::vec(-2.0f64..2.0, 1..6),
            seed_rows in proptest::collection::vec(any::<u8>(), 1..40),
            pick in 0usize..6,
        ) {
            let m = weights.len();
            let i = pick % m;
            let model = random_logistic(&weights);
            // model with feature i's levels swapped: f'(x) = f(x with x_i flipped)
            struct Flipped<'a>(&'a crate::learn::LogisticRegression, usize);
            impl ProbModel for Flipped<'_> {
                fn predict(&self, x: &[u8]) -> Option<f64> {
                    let mut r = x.to_vec();
                    r[self.1] ^= 1;
                    self.0.predict(&r)
                }
                fn feature_count(&self) -> usize { self.0.feature_count() }
                fn kind(&self) -> ModelKind { ModelKind::LogReg }
            }
            let values: Vec<u8> = seed_rows
                .iter()
                .flat_map(|&r| (0..m).map(move |k| (r >> (k % 8)) & 1))
                .collect();
            let flipped_values: Vec<u8> = values
                .iter()
                .enumerate()
                .map(|(j, &v)| if j % m == i { v ^ 1 } else { v })
                .collect();
            let y = vec![0u8; seed_rows.len()];
            let d = Dataset::binary(names(m), values, y.clone()).unwrap();
            let d_flip = Dataset::binary(names(m), flipped_values, y).unwrap();
            let a = amie(&model, &d, i).unwrap().value;
            let b = amie(&Flipped(&model, i), &d_flip, i).unwrap().value;
            prop_assert_eq!(a, -b);
        }
    }
}
