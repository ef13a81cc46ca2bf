//! Feature tables.
//!
//! [`Dataset`] is what models train and explain on: small integer level codes
//! per feature plus a binary outcome. [`LevelTable`] holds raw multi-level
//! samples (e.g. from a parsed network) before one-hot encoding.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    feature_names: Vec<String>,
    cardinalities: Vec<u8>,
    values: Vec<u8>,
    outcome: Vec<u8>,
    split: Option<Vec<Split>>,
}

impl Dataset {
    /// `values` is row-major with one entry per feature.
    pub fn new(feature_names: Vec<String>, cardinalities: Vec<u8>, values: Vec<u8>, outcome: Vec<u8>) -> Result<Self> {
        let m = feature_names.len();
        if cardinalities.len() != m {
            return Err(Error::Data(format!("{} cardinalities for {} features", cardinalities.len(), m)));
        }
        if values.len() != m * outcome.len() {
            return Err(Error::Data(format!(
                "{} values do not form {} rows of {} features",
                values.len(),
                outcome.len(),
                m
            )));
        }
        if let Some(pos) = outcome.iter().position(|&y| y > 1) {
            return Err(Error::Data(format!("outcome at row {pos} is not binary")));
        }
        if m > 0 {
            for (i, row) in values.chunks_exact(m).enumerate() {
                if let Some(j) = (0..m).find(|&j| row[j] >= cardinalities[j]) {
                    return Err(Error::Data(format!(
                        "row {i}, column `{}`: level {} exceeds cardinality {}",
                        feature_names[j], row[j], cardinalities[j]
                    )));
                }
            }
        }
        Ok(Self { feature_names, cardinalities, values, outcome, split: None })
    }

    /// All-binary dataset.
    pub fn binary(feature_names: Vec<String>, values: Vec<u8>, outcome: Vec<u8>) -> Result<Self> {
        let cards = vec![2; feature_names.len()];
        Self::new(feature_names, cards, values, outcome)
    }

    pub fn n_rows(&self) -> usize {
        self.outcome.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcome.is_empty()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn cardinalities(&self) -> &[u8] {
        &self.cardinalities
    }

    pub fn row(&self, i: usize) -> &[u8] {
        let m = self.n_features();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[u8]> + '_ {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn value(&self, row: usize, feature: usize) -> u8 {
        self.values[row * self.n_features() + feature]
    }

    pub fn column(&self, feature: usize) -> Vec<u8> {
        (0..self.n_rows()).map(|i| self.value(i, feature)).collect()
    }

    pub fn outcome(&self) -> &[u8] {
        &self.outcome
    }

    pub fn split_tags(&self) -> Option<&[Split]> {
        self.split.as_deref()
    }

    pub fn with_split_tags(mut self, tags: Vec<Split>) -> Result<Self> {
        if tags.len() != self.n_rows() {
            return Err(Error::Data(format!("{} split tags for {} rows", tags.len(), self.n_rows())));
        }
        self.split = Some(tags);
        Ok(self)
    }

    /// Rows at `indices`, in that order, without split tags.
    pub fn select(&self, indices: &[usize]) -> Self {
        let m = self.n_features();
        let mut values = Vec::with_capacity(indices.len() * m);
        let mut outcome = Vec::with_capacity(indices.len());
        for &i in indices {
            values.extend_from_slice(self.row(i));
            outcome.push(self.outcome[i]);
        }
        Self {
            feature_names: self.feature_names.clone(),
            cardinalities: self.cardinalities.clone(),
            values,
            outcome,
            split: None,
        }
    }

    /// Rows carrying the given split tag; empty if the table is untagged.
    pub fn part(&self, which: Split) -> Self {
        let idx: Vec<usize> = match &self.split {
            Some(tags) => (0..self.n_rows()).filter(|&i| tags[i] == which).collect(),
            None => Vec::new(),
        };
        self.select(&idx)
    }

    pub fn train(&self) -> Self {
        self.part(Split::Train)
    }

    pub fn test(&self) -> Self {
        self.part(Split::Test)
    }

    /// Same rows with column `feature` replaced.
    pub fn with_column(&self, feature: usize, column: &[u8]) -> Self {
        let mut out = self.clone();
        let m = self.n_features();
        for (i, &v) in column.iter().enumerate() {
            out.values[i * m + feature] = v;
        }
        out
    }

    pub fn positive_rate(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.outcome.iter().map(|&y| y as usize).sum::<usize>() as f64 / self.n_rows() as f64
    }

    pub fn has_both_classes(&self) -> bool {
        self.outcome.contains(&0) && self.outcome.contains(&1)
    }
}

/// Tags rows uniformly at random: exactly `round(train_fraction * n)` rows
/// become training rows, the rest test rows.
pub fn split(data: &Dataset, train_fraction: f64, seed_value: u64) -> Result<Dataset> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let n = data.n_rows();
    let n_train = libm::round(train_fraction * n as f64) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed_value, &[seed::stream::SPLIT]));
    let mut tags = vec![Split::Test; n];
    for &i in &order[..n_train] {
        tags[i] = Split::Train;
    }
    data.clone().with_split_tags(tags)
}

/// Raw samples of named multi-level variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelTable {
    pub names: Vec<String>,
    pub levels: Vec<Vec<String>>,
    /// Row-major, one level index per variable.
    pub values: Vec<u8>,
}

impl LevelTable {
    pub fn n_rows(&self) -> usize {
        if self.names.is_empty() {
            0
        } else {
            self.values.len() / self.names.len()
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn row(&self, i: usize) -> &[u8] {
        let m = self.names.len();
        &self.values[i * m..(i + 1) * m]
    }

    /// Level of `var` observed most often; ties go to the lower level index.
    pub fn most_frequent_level(&self, var: usize) -> usize {
        let mut counts = vec![0usize; self.levels[var].len()];
        for i in 0..self.n_rows() {
            counts[self.row(i)[var] as usize] += 1;
        }
        let mut best = 0;
        for (k, &c) in counts.iter().enumerate() {
            if c > counts[best] {
                best = k;
            }
        }
        best
    }

    /// Copy without the listed variables.
    pub fn drop_vars(&self, drop: &[usize]) -> LevelTable {
        let keep: Vec<usize> = (0..self.names.len()).filter(|v| !drop.contains(v)).collect();
        let mut values = Vec::with_capacity(self.n_rows() * keep.len());
        for i in 0..self.n_rows() {
            let row = self.row(i);
            values.extend(keep.iter().map(|&v| row[v]));
        }
        LevelTable {
            names: keep.iter().map(|&v| self.names[v].clone()).collect(),
            levels: keep.iter().map(|&v| self.levels[v].clone()).collect(),
            values,
        }
    }
}

/// Expands every non-outcome variable into one binary column per level,
/// named `Var_Level`, in variable then level order. The outcome becomes 1
/// exactly when its level is in `positive_levels`.
pub fn one_hot_encode(table: &LevelTable, outcome_var: &str, positive_levels: &[&str]) -> Result<Dataset> {
    let y =
        table.index_of(outcome_var).ok_or_else(|| Error::Data(format!("unknown outcome variable `{outcome_var}`")))?;
    let y_levels = &table.levels[y];
    let mut positive = BTreeSet::new();
    for &lvl in positive_levels {
        let k = y_levels
            .iter()
            .position(|l| l == lvl)
            .ok_or_else(|| Error::Data(format!("`{outcome_var}` has no level `{lvl}`")))?;
        positive.insert(k as u8);
    }
    if positive.is_empty() || positive.len() == y_levels.len() {
        return Err(Error::InvalidArgument(
            "positive levels must be a non-empty proper subset of the outcome levels".to_string(),
        ));
    }

    let vars: Vec<usize> = (0..table.names.len()).filter(|&v| v != y).collect();
    let mut names = Vec::new();
    let mut offsets = Vec::with_capacity(vars.len());
    for &v in &vars {
        offsets.push(names.len());
        for lvl in &table.levels[v] {
            names.push(format!("{}_{}", table.names[v], lvl));
        }
    }
    let m = names.len();
    let n = table.n_rows();
    let mut values = vec![0u8; n * m];
    let mut outcome = Vec::with_capacity(n);
    for i in 0..n {
        let row = table.row(i);
        for (k, &v) in vars.iter().enumerate() {
            values[i * m + offsets[k] + row[v] as usize] = 1;
        }
        outcome.push(positive.contains(&row[y]) as u8);
    }
    Dataset::binary(names, values, outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(m: usize) -> Vec<String> {
        (0..m).map(|i| format!("X{i}")).collect()
    }

    fn toy(n: usize) -> Dataset {
        let values = (0..n).map(|i| (i % 2) as u8).collect();
        let outcome = (0..n).map(|i| ((i / 2) % 2) as u8).collect();
        Dataset::binary(names(1), values, outcome).unwrap()
    }

    #[test]
    fn rejects_bad_shapes_and_levels() {
        assert!(Dataset::binary(names(2), vec![0, 1, 1], vec![0, 1]).is_err());
        assert!(Dataset::binary(names(1), vec![0, 2], vec![0, 1]).is_err());
        assert!(Dataset::binary(names(1), vec![0, 1], vec![0, 2]).is_err());
    }

    #[test]
    fn split_counts_follow_rounding() {
        let d = split(&toy(10), 0.7, 1).unwrap();
        assert_eq!(d.train().n_rows(), 7);
        assert_eq!(d.test().n_rows(), 3);
        let d = split(&toy(101), 0.5, 3).unwrap();
        let (tr, te) = (d.train().n_rows(), d.test().n_rows());
        assert_eq!(tr + te, 101);
        assert!(tr.abs_diff(te) == 1);
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let a = split(&toy(50), 0.7, 9).unwrap();
        let b = split(&toy(50), 0.7, 9).unwrap();
        let c = split(&toy(50), 0.7, 10).unwrap();
        assert_eq!(a.split_tags(), b.split_tags());
        assert_ne!(a.split_tags(), c.split_tags());
    }

    #[test]
    fn split_errors() {
        assert!(split(&toy(10), 1.0, 0).is_err());
        assert!(split(&toy(10), 0.0, 0).is_err());
        assert_eq!(split(&toy(0), 0.5, 0), Err(Error::EmptyData));
    }

    fn three_level_table() -> LevelTable {
        LevelTable {
            names: vec!["A".into(), "B".into()],
            levels: vec![vec!["lo".into(), "mid".into(), "hi".into()], vec!["no".into(), "yes".into()]],
            values: vec![0, 0, 1, 1, 2, 1, 1, 0],
        }
    }

    #[test]
    fn one_hot_three_levels() {
        let d = one_hot_encode(&three_level_table(), "B", &["yes"]).unwrap();
        assert_eq!(d.feature_names(), &["A_lo", "A_mid", "A_hi"]);
        assert_eq!(d.n_rows(), 4);
        for i in 0..d.n_rows() {
            assert_eq!(d.row(i).iter().map(|&v| v as usize).sum::<usize>(), 1);
        }
        assert_eq!(d.row(2), &[0, 0, 1]);
        assert_eq!(d.outcome(), &[0, 1, 1, 0]);
    }

    #[test]
    fn one_hot_rejects_unknown_or_full_levels() {
        let t = three_level_table();
        assert!(one_hot_encode(&t, "B", &["maybe"]).is_err());
        assert!(one_hot_encode(&t, "B", &["yes", "no"]).is_err());
        assert!(one_hot_encode(&t, "B", &[]).is_err());
        assert!(one_hot_encode(&t, "C", &["yes"]).is_err());
    }

    #[test]
    fn most_frequent_level_and_drop() {
        let t = three_level_table();
        assert_eq!(t.most_frequent_level(0), 1);
        let d = t.drop_vars(&[0]);
        assert_eq!(d.names, vec!["B".to_string()]);
        assert_eq!(d.values, vec![0, 1, 1, 0]);
    }
}
