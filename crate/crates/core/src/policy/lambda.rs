//! Pairwise training signal with rank-dependent swap deltas.
//!
//! The objective for one context is a weighted sum of logistic pairwise
//! losses over item pairs whose labels differ. Each pair's weight is the
//! change in discounted reward that swapping the two items would cause at
//! the scorer's *current* ranking:
//!
//! ```text
//! delta(i, j) = |discount(rank_i) - discount(rank_j)| * (label_i - label_j)
//! ```
//!
//! optionally divided by the context's ideal reward. Training alternates
//! two phases: refresh the deltas at the current ranking (they depend on
//! parameters only through the integer ranks, so they are treated as
//! constants), then descend the smooth surrogate
//! `sum_pairs delta * ln(1 + exp(-(s_hi - s_lo)))`. Keeping the phases in
//! separate functions makes the surrogate a differentiable function of
//! the parameters, which the finite-difference tests below rely on.

use crate::error::Result;
use crate::logs::context::TrainingContext;
use crate::num::Real;
use crate::policy::scorer::{rank_by_scores, ScoringFunction};
use crate::reward::discount::{ideal_reward, RankDiscount};

/// One ordered pair: the item at `hi` outranks the item at `lo` in label.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairDelta<T> {
    pub hi: usize,
    pub lo: usize,
    /// Reward change a swap would cause; always positive.
    pub weight: T,
}

/// Numerically stable `ln(1 + exp(-x))`.
fn softplus_neg<T: Real>(x: T) -> T {
    if x < T::zero() {
        -x + x.exp().ln_1p()
    } else {
        (-x).exp().ln_1p()
    }
}

/// Logistic sigmoid `1 / (1 + exp(-x))`.
fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Swap deltas for one slate at the ranking induced by `scores`.
///
/// Emits one entry per item pair with distinct labels, weighted by the
/// absolute discount difference of their current ranks times the label
/// gap, divided by the slate's ideal reward when `idcg_normalize` is set.
pub fn pair_deltas<T: Real>(
    scores: &[T],
    labels: &[T],
    item_ids: &[u64],
    discount: &RankDiscount<T>,
    idcg_normalize: bool,
) -> Result<Vec<PairDelta<T>>> {
    let order = rank_by_scores(scores, item_ids);
    let mut rank_of = vec![0usize; scores.len()];
    for (slot, &idx) in order.iter().enumerate() {
        rank_of[idx] = slot + 1;
    }
    let norm = if idcg_normalize {
        let ideal = ideal_reward(labels.len(), labels, discount)?;
        if ideal > T::zero() {
            ideal
        } else {
            T::one()
        }
    } else {
        T::one()
    };
    let mut deltas = Vec::new();
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            if labels[i] > labels[j] {
                let gap =
                    (discount.at(rank_of[i])? - discount.at(rank_of[j])?).abs();
                deltas.push(PairDelta {
                    hi: i,
                    lo: j,
                    weight: gap * (labels[i] - labels[j]) / norm,
                });
            }
        }
    }
    Ok(deltas)
}

/// Surrogate loss for one slate under frozen deltas.
pub fn pairwise_loss<T: Real>(scores: &[T], deltas: &[PairDelta<T>]) -> T {
    deltas
        .iter()
        .map(|d| d.weight * softplus_neg(scores[d.hi] - scores[d.lo]))
        .sum()
}

/// Per-item derivative `dloss/dscore_k` under frozen deltas.
pub fn pairwise_score_grad<T: Real>(scores: &[T], deltas: &[PairDelta<T>]) -> Vec<T> {
    let mut coeff = vec![T::zero(); scores.len()];
    for d in deltas {
        let g = d.weight * sigmoid(scores[d.lo] - scores[d.hi]);
        coeff[d.hi] -= g;
        coeff[d.lo] += g;
    }
    coeff
}

/// Scores every item of a context under one scorer.
pub fn context_scores<T: Real>(
    scorer: &ScoringFunction<T>,
    context: &TrainingContext<T>,
) -> Result<Vec<T>> {
    context
        .items
        .iter()
        .map(|item| scorer.score(&item.features, &context.context_features))
        .collect()
}

/// Refreshes the swap deltas of one context at the scorer's current
/// ranking (the non-smooth phase).
pub fn context_deltas<T: Real>(
    scorer: &ScoringFunction<T>,
    context: &TrainingContext<T>,
    discount: &RankDiscount<T>,
    idcg_normalize: bool,
) -> Result<Vec<PairDelta<T>>> {
    let scores = context_scores(scorer, context)?;
    let labels: Vec<T> = context.items.iter().map(|i| i.label).collect();
    let ids: Vec<u64> = context.items.iter().map(|i| i.item_id).collect();
    pair_deltas(&scores, &labels, &ids, discount, idcg_normalize)
}

/// Weighted surrogate loss of one context under frozen deltas
/// (the smooth phase).
pub fn context_loss<T: Real>(
    scorer: &ScoringFunction<T>,
    context: &TrainingContext<T>,
    deltas: &[PairDelta<T>],
) -> Result<T> {
    let scores = context_scores(scorer, context)?;
    Ok(context.context_weight * pairwise_loss(&scores, deltas))
}

/// Weighted surrogate loss and parameter gradient of one context under
/// frozen deltas. The gradient is accumulated into `grad`.
pub fn context_loss_and_grad<T: Real>(
    scorer: &ScoringFunction<T>,
    context: &TrainingContext<T>,
    deltas: &[PairDelta<T>],
    grad: &mut [T],
) -> Result<T> {
    let scores = context_scores(scorer, context)?;
    let coeff = pairwise_score_grad(&scores, deltas);
    for (item, &c) in context.items.iter().zip(&coeff) {
        if c != T::zero() {
            scorer.accumulate_score_grad(
                &item.features,
                &context.context_features,
                context.context_weight * c,
                grad,
            )?;
        }
    }
    Ok(context.context_weight * pairwise_loss(&scores, deltas))
}

/// Refreshes deltas and evaluates loss and gradient in one call — the
/// per-context unit of work for minibatch-refresh training.
pub fn lambda_gradient<T: Real>(
    scorer: &ScoringFunction<T>,
    context: &TrainingContext<T>,
    discount: &RankDiscount<T>,
    idcg_normalize: bool,
    grad: &mut [T],
) -> Result<T> {
    let deltas = context_deltas(scorer, context, discount, idcg_normalize)?;
    context_loss_and_grad(scorer, context, &deltas, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logs::context::ContextItem;
    use crate::policy::scorer::LinearScorer;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn context(features: &[Vec<f64>], labels: &[f64], weight: f64) -> TrainingContext<f64> {
        TrainingContext {
            session_id: 0,
            query_id: 0,
            items: features
                .iter()
                .zip(labels)
                .enumerate()
                .map(|(id, (f, &label))| ContextItem {
                    item_id: id as u64,
                    features: f.clone(),
                    label,
                    logged_rank: Some(id + 1),
                    clicked: label > 0.0,
                })
                .collect(),
            context_weight: weight,
            segment: 0,
            context_features: vec![0.5],
        }
    }

    #[test]
    fn two_item_slate_has_closed_form_delta_and_loss() {
        // The positive outscores the negative, so they sit at ranks 1
        // and 2. delta = (d(1) - d(2)) * 1, normalized by the ideal
        // reward d(1) * 1 = 1.
        let scores = [0.2, -0.1];
        let labels = [1.0, 0.0];
        let ids = [0u64, 1];
        let deltas =
            pair_deltas(&scores, &labels, &ids, &RankDiscount::Log, true).unwrap();
        assert_eq!(deltas.len(), 1);
        assert_eq!((deltas[0].hi, deltas[0].lo), (0, 1));
        let d2 = 0.630_929_753_571_457_4;
        assert_relative_eq!(deltas[0].weight, 1.0 - d2, max_relative = 1e-12);
        let expected_loss = (1.0 - d2) * (1.0 + (-(0.2f64 - (-0.1))).exp()).ln();
        assert_relative_eq!(
            pairwise_loss(&scores, &deltas),
            expected_loss,
            max_relative = 1e-12
        );
    }

    #[test]
    fn equal_labels_produce_no_pairs() {
        let deltas = pair_deltas(
            &[1.0, 0.0, -1.0],
            &[0.5, 0.5, 0.5],
            &[0, 1, 2],
            &RankDiscount::Log,
            true,
        )
        .unwrap();
        assert!(deltas.is_empty());
    }

    #[test]
    fn deltas_are_positive_and_respect_label_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.random_range(2..7);
            let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            let labels: Vec<f64> =
                (0..n).map(|_| [0.0, 0.2, 1.0][rng.random_range(0..3)]).collect();
            let ids: Vec<u64> = (0..n as u64).collect();
            let deltas =
                pair_deltas(&scores, &labels, &ids, &RankDiscount::Log, true).unwrap();
            for d in &deltas {
                assert!(d.weight > 0.0);
                assert!(labels[d.hi] > labels[d.lo]);
            }
        }
    }

    #[test]
    fn softplus_is_stable_at_extremes() {
        assert_relative_eq!(softplus_neg(800.0f64), 0.0, epsilon = 1e-300);
        assert_relative_eq!(softplus_neg(-800.0f64), 800.0, max_relative = 1e-12);
        assert_relative_eq!(softplus_neg(0.0f64), 2.0f64.ln(), max_relative = 1e-12);
        assert!(sigmoid(-800.0f64) >= 0.0);
        assert!(sigmoid(800.0f64) <= 1.0);
    }

    /// With deltas frozen, the analytic parameter gradient must match
    /// central finite differences of the surrogate loss.
    #[test]
    fn frozen_delta_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let features: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..3).map(|_| rng.random::<f64>() - 0.5).collect())
            .collect();
        let ctx = context(&features, &[1.0, 0.0, 0.2, 0.0, 1.0], 0.7);
        let scorers = vec![
            ScoringFunction::Linear(LinearScorer {
                weights: vec![0.4, -0.2, 0.1, 0.3],
                bias: 0.05,
            }),
            ScoringFunction::mlp(4, 6, &mut rng).unwrap(),
        ];
        for scorer in scorers {
            let deltas =
                context_deltas(&scorer, &ctx, &RankDiscount::Log, true).unwrap();
            assert!(!deltas.is_empty());
            let mut grad = vec![0.0; scorer.n_params()];
            context_loss_and_grad(&scorer, &ctx, &deltas, &mut grad).unwrap();
            let eps = 1e-6;
            for p in 0..scorer.n_params() {
                let mut bump = vec![0.0; scorer.n_params()];
                bump[p] = -eps;
                let mut plus = scorer.clone();
                plus.step(&bump, 1.0);
                bump[p] = eps;
                let mut minus = scorer.clone();
                minus.step(&bump, 1.0);
                let numeric = (context_loss(&plus, &ctx, &deltas).unwrap()
                    - context_loss(&minus, &ctx, &deltas).unwrap())
                    / (2.0 * eps);
                assert_relative_eq!(grad[p], numeric, max_relative = 1e-4, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn lambda_gradient_agrees_with_the_two_phase_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let features: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..2).map(|_| rng.random::<f64>()).collect())
            .collect();
        let ctx = context(&features, &[1.0, 0.0, 0.0, 0.2], 0.3);
        let scorer = ScoringFunction::Linear(LinearScorer {
            weights: vec![0.2, -0.4, 0.6],
            bias: 0.0,
        });
        let mut grad_one = vec![0.0; scorer.n_params()];
        let loss_one =
            lambda_gradient(&scorer, &ctx, &RankDiscount::Log, true, &mut grad_one).unwrap();
        let deltas = context_deltas(&scorer, &ctx, &RankDiscount::Log, true).unwrap();
        let mut grad_two = vec![0.0; scorer.n_params()];
        let loss_two = context_loss_and_grad(&scorer, &ctx, &deltas, &mut grad_two).unwrap();
        assert_eq!(loss_one, loss_two);
        assert_eq!(grad_one, grad_two);
    }
}
