use alloc::vec;
use alloc::vec::Vec;

use super::{ModelKind, ProbModel};
use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LogRegParams {
    pub l2_penalty: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub grad_tolerance: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        Self { l2_penalty: 1e-4, learning_rate: 0.1, max_epochs: 2000, grad_tolerance: 1e-6 }
    }
}

/// Logistic regression fitted on standardized features.
///
/// The optimized objective is the mean negative log-likelihood plus
/// `l2_penalty / 2 * |w|^2` over the standardized weights (intercept
/// unpenalized). Constant columns get weight zero.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LogisticRegression {
    /// Weights on the original feature scale.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Weights on the standardized scale, comparable across features.
    pub standardized_coefficients: Vec<f64>,
    pub epochs: usize,
    pub converged: bool,
    /// Infinity norm of the objective gradient at the returned weights.
    pub final_gradient: f64,
    pub final_loss: f64,
    pub params: LogRegParams,
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + libm::log1p(libm::exp(-z))
    } else {
        libm::log1p(libm::exp(z))
    }
}

struct Standardized {
    x: Vec<f64>,
    mean: Vec<f64>,
    scale: Vec<f64>,
}

fn standardize(data: &Dataset) -> Standardized {
    let (n, m) = (data.n_rows(), data.n_features());
    let mut mean = vec![0.0; m];
    let mut sq = vec![0.0; m];
    for row in data.rows() {
        for (j, &v) in row.iter().enumerate() {
            mean[j] += v as f64;
            sq[j] += (v as f64) * (v as f64);
        }
    }
    let mut scale = vec![0.0; m];
    for j in 0..m {
        mean[j] /= n as f64;
        let var = (sq[j] / n as f64 - mean[j] * mean[j]).max(0.0);
        scale[j] = libm::sqrt(var);
    }
    let mut x = Vec::with_capacity(n * m);
    for row in data.rows() {
        for (j, &v) in row.iter().enumerate() {
            x.push(if scale[j] > 0.0 { (v as f64 - mean[j]) / scale[j] } else { 0.0 });
        }
    }
    Standardized { x, mean, scale }
}

/// Returns the loss and fills `grad` (weights then intercept).
fn loss_and_gradient(x: &[f64], y: &[u8], w: &[f64], b: f64, lambda: f64, grad: &mut [f64]) -> f64 {
    let m = w.len();
    let n = y.len();
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for (row, &yi) in x.chunks_exact(m).zip(y) {
        let z = b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
        loss += softplus(z) - if yi == 1 { z } else { 0.0 };
        let r = sigmoid(z) - yi as f64;
        for (g, &a) in grad[..m].iter_mut().zip(row) {
            *g += r * a;
        }
        grad[m] += r;
    }
    let inv = 1.0 / n as f64;
    grad.iter_mut().for_each(|g| *g *= inv);
    let mut penalty = 0.0;
    for (g, &wj) in grad[..m].iter_mut().zip(w) {
        *g += lambda * wj;
        penalty += wj * wj;
    }
    loss * inv + 0.5 * lambda * penalty
}

pub fn fit_logreg(train: &Dataset, params: &LogRegParams) -> Result<LogisticRegression> {
    let p = params;
    if !(p.l2_penalty > 0.0 && p.learning_rate > 0.0 && p.max_epochs > 0 && p.grad_tolerance > 0.0) {
        return Err(Error::InvalidArgument("logistic regression parameters must be positive".into()));
    }
    if train.n_rows() < 2 {
        return Err(Error::EmptyData);
    }
    if !train.has_both_classes() {
        return Err(Error::SingleClass);
    }
    let m = train.n_features();
    if m == 0 {
        return Err(Error::InvalidArgument("no features to fit".into()));
    }
    let s = standardize(train);
    let y = train.outcome();
    let mut w = vec![0.0; m];
    // start the intercept at the log-odds of the base rate
    let rate = train.positive_rate();
    let mut b = libm::log(rate / (1.0 - rate));
    let mut grad = vec![0.0; m + 1];

    let mut epochs = 0;
    let mut loss = loss_and_gradient(&s.x, y, &w, b, p.l2_penalty, &mut grad);
    let norm = |g: &[f64]| g.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    while norm(&grad) > p.grad_tolerance && epochs < p.max_epochs {
        for (wj, gj) in w.iter_mut().zip(&grad) {
            *wj -= p.learning_rate * gj;
        }
        b -= p.learning_rate * grad[m];
        epochs += 1;
        loss = loss_and_gradient(&s.x, y, &w, b, p.l2_penalty, &mut grad);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss(epochs));
        }
    }
    let final_gradient = norm(&grad);

    let coefficients: Vec<f64> = (0..m).map(|j| if s.scale[j] > 0.0 { w[j] / s.scale[j] } else { 0.0 }).collect();
    let intercept = b - (0..m).map(|j| coefficients[j] * s.mean[j]).sum::<f64>();
    Ok(LogisticRegression {
        coefficients,
        intercept,
        standardized_coefficients: w,
        epochs,
        converged: final_gradient <= p.grad_tolerance,
        final_gradient,
        final_loss: loss,
        params: *p,
    })
}

impl LogisticRegression {
    pub fn score(&self, x: &[u8]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(c, &v)| c * v as f64).sum::<f64>()
    }
}

impl ProbModel for LogisticRegression {
    fn predict(&self, x: &[u8]) -> Option<f64> {
        assert_eq!(x.len(), self.coefficients.len(), "feature row arity");
        Some(sigmoid(self.score(x)))
    }

    fn feature_count(&self) -> usize {
        self.coefficients.len()
    }

    fn kind(&self) -> ModelKind {
        ModelKind::LogReg
    }
}
