use alloc::vec::Vec;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::stats::{contingency_2x2, pearson_2x2, ChiSquareTest};

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FilterDecision {
    pub feature: usize,
    pub test: ChiSquareTest,
    /// The feature looks marginally independent of the outcome (`p > alpha`).
    pub filtered: bool,
}

/// Marginal chi-square test of each candidate feature against the outcome.
///
/// A non-zero AMIE on a feature that is marginally independent of the outcome
/// can only come from conditioning on a collider, so such candidates are
/// marked as filtered.
pub fn independence_filter(data: &Dataset, candidates: &[usize], alpha: f64) -> Result<Vec<FilterDecision>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument("alpha must lie in (0, 1)".into()));
    }
    candidates
        .iter()
        .map(|&f| {
            if f >= data.n_features() {
                return Err(Error::NodeOutOfRange { index: f, len: data.n_features() });
            }
            let test = pearson_2x2(contingency_2x2(&data.column(f), data.outcome())?);
            Ok(FilterDecision { feature: f, test, filtered: test.p_value > alpha })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn from_table(t: [[usize; 2]; 2]) -> Dataset {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (a, row) in t.iter().enumerate() {
            for (b, &count) in row.iter().enumerate() {
                for _ in 0..count {
                    x.push(a as u8);
                    y.push(b as u8);
                }
            }
        }
        Dataset::binary(vec!["x".to_string()], x, y).unwrap()
    }

    #[test]
    fn balanced_table_is_filtered() {
        let d = from_table([[25, 25], [25, 25]]);
        let r = independence_filter(&d, &[0], 0.05).unwrap();
        assert_eq!(r[0].test.statistic, 0.0);
        assert_eq!(r[0].test.p_value, 1.0);
        assert!(r[0].filtered);
    }

    #[test]
    fn dependent_table_is_retained() {
        let d = from_table([[30, 10], [10, 30]]);
        let r = independence_filter(&d, &[0], 0.05).unwrap();
        // N (ad - bc)^2 / ((a+b)(c+d)(a+c)(b+d)) = 80 * 800^2 / 40^4
        assert!((r[0].test.statistic - 20.0).abs() < 1e-9);
        assert!(!r[0].filtered);
    }

    #[test]
    fn constant_column_is_degenerate() {
        let d = from_table([[0, 0], [12, 9]]);
        let r = independence_filter(&d, &[0], 0.05).unwrap();
        assert!(r[0].test.degenerate);
        assert!(r[0].filtered);
        assert!(independence_filter(&d, &[0], 1.0).is_err());
    }
}
