//! Parametric scoring functions.
//!
//! A scorer maps the concatenation of item features and query-context
//! features to a real-valued score; ranking a slate means sorting by
//! score. Two families are provided: a linear model and a one-hidden-
//! layer tanh network. Both expose their parameters as a flat vector so
//! the training loop can treat them uniformly.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Linear scorer: `w . x + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LinearScorer<T: Real> {
    pub weights: Vec<T>,
    pub bias: T,
}

/// One-hidden-layer scorer: `w2 . tanh(W1 x + b1) + b2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MlpScorer<T: Real> {
    /// Hidden-unit weight rows, each of input length.
    pub w1: Vec<Vec<T>>,
    pub b1: Vec<T>,
    pub w2: Vec<T>,
    pub b2: T,
}

/// A trainable scoring function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound = "")]
pub enum ScoringFunction<T: Real> {
    Linear(LinearScorer<T>),
    Mlp1(MlpScorer<T>),
}

impl<T: Real> ScoringFunction<T> {
    /// Zero-initialized linear scorer over `input_dim` features.
    pub fn linear(input_dim: usize) -> Self {
        ScoringFunction::Linear(LinearScorer {
            weights: vec![T::zero(); input_dim],
            bias: T::zero(),
        })
    }

    /// Randomly initialized one-hidden-layer scorer. Weights draw from
    /// centered normals scaled by fan-in; biases start at zero.
    pub fn mlp(input_dim: usize, hidden: usize, rng: &mut impl Rng) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::Config("mlp hidden width must be >= 1".into()));
        }
        let w1_std = Normal::new(0.0, 1.0 / (input_dim.max(1) as f64).sqrt())
            .expect("std is finite");
        let w2_std = Normal::new(0.0, 1.0 / (hidden as f64).sqrt()).expect("std is finite");
        Ok(ScoringFunction::Mlp1(MlpScorer {
            w1: (0..hidden)
                .map(|_| (0..input_dim).map(|_| T::of(w1_std.sample(rng))).collect())
                .collect(),
            b1: vec![T::zero(); hidden],
            w2: (0..hidden).map(|_| T::of(w2_std.sample(rng))).collect(),
            b2: T::zero(),
        }))
    }

    /// Expected length of the concatenated feature vector.
    pub fn input_dim(&self) -> usize {
        match self {
            ScoringFunction::Linear(m) => m.weights.len(),
            ScoringFunction::Mlp1(m) => m.w1.first().map_or(0, Vec::len),
        }
    }

    /// Total number of trainable parameters.
    pub fn n_params(&self) -> usize {
        match self {
            ScoringFunction::Linear(m) => m.weights.len() + 1,
            ScoringFunction::Mlp1(m) => {
                let (h, d) = (m.w1.len(), self.input_dim());
                h * d + h + h + 1
            }
        }
    }

    fn check_dim(&self, item: &[T], context: &[T]) -> Result<()> {
        let got = item.len() + context.len();
        if got != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got });
        }
        Ok(())
    }

    /// Scores one item in its query context.
    pub fn score(&self, item: &[T], context: &[T]) -> Result<T> {
        self.check_dim(item, context)?;
        let input = item.iter().chain(context.iter());
        Ok(match self {
            ScoringFunction::Linear(m) => {
                m.bias + input.zip(&m.weights).map(|(&x, &w)| x * w).sum::<T>()
            }
            ScoringFunction::Mlp1(m) => {
                let mut out = m.b2;
                let input: Vec<T> = input.copied().collect();
                for ((row, &b), &v) in m.w1.iter().zip(&m.b1).zip(&m.w2) {
                    let pre = b + row.iter().zip(&input).map(|(&w, &x)| w * x).sum::<T>();
                    out += v * pre.tanh();
                }
                out
            }
        })
    }

    /// Adds `coeff * dscore/dparams` at this item into `grad`, which must
    /// have length [`Self::n_params`].
    pub fn accumulate_score_grad(
        &self,
        item: &[T],
        context: &[T],
        coeff: T,
        grad: &mut [T],
    ) -> Result<()> {
        self.check_dim(item, context)?;
        debug_assert_eq!(grad.len(), self.n_params());
        let input: Vec<T> = item.iter().chain(context.iter()).copied().collect();
        match self {
            ScoringFunction::Linear(_) => {
                for (g, &x) in grad.iter_mut().zip(&input) {
                    *g += coeff * x;
                }
                grad[input.len()] += coeff;
            }
            ScoringFunction::Mlp1(m) => {
                let (h, d) = (m.w1.len(), input.len());
                for (j, ((row, &b), &v)) in m.w1.iter().zip(&m.b1).zip(&m.w2).enumerate() {
                    let pre = b + row.iter().zip(&input).map(|(&w, &x)| w * x).sum::<T>();
                    let act = pre.tanh();
                    let dact = (T::one() - act * act) * v * coeff;
                    for (g, &x) in grad[j * d..(j + 1) * d].iter_mut().zip(&input) {
                        *g += dact * x;
                    }
                    grad[h * d + j] += dact;
                    grad[h * d + h + j] += coeff * act;
                }
                grad[h * d + 2 * h] += coeff;
            }
        }
        Ok(())
    }

    /// Takes a gradient step `params -= lr * grad`.
    pub fn step(&mut self, grad: &[T], learning_rate: T) {
        debug_assert_eq!(grad.len(), self.n_params());
        match self {
            ScoringFunction::Linear(m) => {
                for (w, &g) in m.weights.iter_mut().zip(grad) {
                    *w -= learning_rate * g;
                }
                m.bias -= learning_rate * grad[grad.len() - 1];
            }
            ScoringFunction::Mlp1(m) => {
                let (h, d) = (m.w1.len(), m.w1.first().map_or(0, Vec::len));
                for (j, row) in m.w1.iter_mut().enumerate() {
                    for (w, &g) in row.iter_mut().zip(&grad[j * d..(j + 1) * d]) {
                        *w -= learning_rate * g;
                    }
                }
                for (j, b) in m.b1.iter_mut().enumerate() {
                    *b -= learning_rate * grad[h * d + j];
                }
                for (j, w) in m.w2.iter_mut().enumerate() {
                    *w -= learning_rate * grad[h * d + h + j];
                }
                m.b2 -= learning_rate * grad[h * d + 2 * h];
            }
        }
    }

    /// Sum of squared parameters, for L2 penalties.
    pub fn params_squared(&self) -> T {
        match self {
            ScoringFunction::Linear(m) => {
                m.weights.iter().map(|&w| w * w).sum::<T>() + m.bias * m.bias
            }
            ScoringFunction::Mlp1(m) => {
                m.w1.iter().flatten().map(|&w| w * w).sum::<T>()
                    + m.b1.iter().map(|&w| w * w).sum::<T>()
                    + m.w2.iter().map(|&w| w * w).sum::<T>()
                    + m.b2 * m.b2
            }
        }
    }

    /// Adds `coeff * params` into `grad` (the L2 penalty gradient).
    pub fn accumulate_l2_grad(&self, coeff: T, grad: &mut [T]) {
        debug_assert_eq!(grad.len(), self.n_params());
        match self {
            ScoringFunction::Linear(m) => {
                for (g, &w) in grad.iter_mut().zip(&m.weights) {
                    *g += coeff * w;
                }
                let last = grad.len() - 1;
                grad[last] += coeff * m.bias;
            }
            ScoringFunction::Mlp1(m) => {
                let params = m
                    .w1
                    .iter()
                    .flatten()
                    .chain(&m.b1)
                    .chain(&m.w2)
                    .chain(std::iter::once(&m.b2));
                for (g, &w) in grad.iter_mut().zip(params) {
                    *g += coeff * w;
                }
            }
        }
    }
}

/// Sorts item indices by descending score, breaking ties by ascending
/// item id so equal-scored slates are still deterministic.
pub fn rank_by_scores<T: Real>(scores: &[T], item_ids: &[u64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| item_ids[a].cmp(&item_ids[b]))
    });
    order
}
