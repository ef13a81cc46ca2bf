//! Probability models of `P(Y = 1 | x)` and model-level baselines.

mod forest;
mod logreg;

pub use forest::{fit_forest, ForestParams, ForestSummary, RandomForest};
pub use logreg::{fit_logreg, LogRegParams, LogisticRegression};

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seed::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ModelKind {
    LogReg,
    RandomForest,
    Oracle,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::LogReg => "logreg",
            ModelKind::RandomForest => "rf",
            ModelKind::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "logreg" | "lr" => Some(ModelKind::LogReg),
            "rf" | "forest" => Some(ModelKind::RandomForest),
            "oracle" => Some(ModelKind::Oracle),
            _ => None,
        }
    }
}

/// A model answering `P(Y = 1 | x)` for a feature row.
///
/// Predictions lie in `[0, 1]` and are deterministic. `None` marks a row on
/// which the conditional is undefined (only the oracle produces it).
pub trait ProbModel: Sync {
    fn predict(&self, x: &[u8]) -> Option<f64>;
    fn feature_count(&self) -> usize;
    fn kind(&self) -> ModelKind;
}

impl<M: ProbModel + ?Sized> ProbModel for &M {
    fn predict(&self, x: &[u8]) -> Option<f64> {
        (**self).predict(x)
    }

    fn feature_count(&self) -> usize {
        (**self).feature_count()
    }

    fn kind(&self) -> ModelKind {
        (**self).kind()
    }
}

/// Fraction of rows where `predict >= 0.5` matches the outcome. Rows with an
/// undefined prediction are skipped.
pub fn accuracy(model: &dyn ProbModel, data: &Dataset) -> Result<f64> {
    let mut hits = 0usize;
    let mut defined = 0usize;
    for (row, &y) in data.rows().zip(data.outcome()) {
        if let Some(p) = model.predict(row) {
            defined += 1;
            hits += usize::from(u8::from(p >= 0.5) == y);
        }
    }
    if defined == 0 {
        return Err(Error::EmptyData);
    }
    Ok(hits as f64 / defined as f64)
}

/// Accuracy drop when one feature column is shuffled, averaged over
/// `repeats` shuffles, for every feature.
pub fn permutation_importance(
    model: &dyn ProbModel,
    data: &Dataset,
    repeats: usize,
    seed_value: u64,
) -> Result<Vec<f64>> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("permutation importance needs repeats >= 1".into()));
    }
    let base = accuracy(model, data)?;
    let mut scores = Vec::with_capacity(data.n_features());
    let mut row = Vec::with_capacity(data.n_features());
    for f in 0..data.n_features() {
        let mut total = 0.0;
        for r in 0..repeats {
            let mut column = data.column(f);
            column.shuffle(&mut seed::rng(seed_value, &[stream::PERMUTE, f as u64, r as u64]));
            let (mut hits, mut defined) = (0usize, 0usize);
            for (i, &y) in data.outcome().iter().enumerate() {
                row.clear();
                row.extend_from_slice(data.row(i));
                row[f] = column[i];
                if let Some(p) = model.predict(&row) {
                    defined += 1;
                    hits += usize::from(u8::from(p >= 0.5) == y);
                }
            }
            total += if defined == 0 { 0.0 } else { hits as f64 / defined as f64 };
        }
        scores.push(base - total / repeats as f64);
    }
    Ok(scores)
}
