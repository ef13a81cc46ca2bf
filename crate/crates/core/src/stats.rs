//! Numerical helpers: incomplete gamma, chi-square tail, 2x2 Pearson test and
//! order-fixed summation.

use crate::error::{Error, Result};

const MAX_ITER: usize = 500;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Natural log of the gamma function.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

fn gamma_series(a: f64, x: f64) -> f64 {
    // P(a, x) by its power series; converges fast for x < a + 1
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * libm::exp(-x + a * libm::log(x) - ln_gamma(a))
}

fn gamma_continued_fraction(a: f64, x: f64) -> f64 {
    // Q(a, x) by modified Lentz; converges fast for x >= a + 1
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    libm::exp(-x + a * libm::log(x) - ln_gamma(a)) * h
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "P(a, x) needs a > 0 and x >= 0");
    if x == 0.0 {
        0.0
    } else if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_continued_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "Q(a, x) needs a > 0 and x >= 0");
    if x == 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_continued_fraction(a, x)
    }
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(statistic: f64, df: u32) -> f64 {
    if statistic.is_nan() {
        return f64::NAN;
    }
    if statistic <= 0.0 {
        return 1.0;
    }
    regularized_gamma_q(df as f64 / 2.0, statistic / 2.0)
}

/// Outcome of a Pearson chi-square test of independence on a 2x2 table.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub p_value: f64,
    /// A row or column total was zero; the test reports independence.
    pub degenerate: bool,
}

/// Pearson chi-square (df = 1, no continuity correction) on counts
/// `table[x][y]`.
pub fn pearson_2x2(table: [[u64; 2]; 2]) -> ChiSquareTest {
    let n = (table[0][0] + table[0][1] + table[1][0] + table[1][1]) as f64;
    let rows = [(table[0][0] + table[0][1]) as f64, (table[1][0] + table[1][1]) as f64];
    let cols = [(table[0][0] + table[1][0]) as f64, (table[0][1] + table[1][1]) as f64];
    if rows.contains(&0.0) || cols.contains(&0.0) {
        return ChiSquareTest { statistic: 0.0, p_value: 1.0, degenerate: true };
    }
    let mut statistic = 0.0;
    for (i, row_total) in rows.iter().enumerate() {
        for (j, col_total) in cols.iter().enumerate() {
            let expected = row_total * col_total / n;
            let diff = table[i][j] as f64 - expected;
            statistic += diff * diff / expected;
        }
    }
    ChiSquareTest { statistic, p_value: chi_square_sf(statistic, 1), degenerate: false }
}

/// Counts the 2x2 contingency table of two binary columns.
pub fn contingency_2x2(x: &[u8], y: &[u8]) -> Result<[[u64; 2]; 2]> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument("columns differ in length".into()));
    }
    let mut t = [[0u64; 2]; 2];
    for (&a, &b) in x.iter().zip(y) {
        if a > 1 || b > 1 {
            return Err(Error::InvalidArgument("contingency table needs binary columns".into()));
        }
        t[a as usize][b as usize] += 1;
    }
    Ok(t)
}

/// Pairwise (cascade) summation in a fixed order, so results do not depend on
/// how work was scheduled.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        let mut s = 0.0;
        for &v in values {
            s += v;
        }
        s
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(pairwise_sum(values) / values.len() as f64)
    }
}
