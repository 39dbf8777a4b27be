//! Minibatch gradient training loops.
//!
//! [`train`] descends the pairwise swap-delta objective; how often the
//! deltas are refreshed is configurable. [`train_pointwise`] is the
//! weighted binary cross-entropy baseline over the same datasets. Both
//! are deterministic given the config seed: shuffling uses a dedicated
//! stream per epoch, and per-context work is parallelized with an
//! order-preserving map so reductions always run in index order.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logs::context::{Dataset, TrainingContext};
use crate::num::Real;
use crate::policy::lambda::{context_deltas, context_loss, context_loss_and_grad, PairDelta};
use crate::policy::scorer::ScoringFunction;
use crate::reward::discount::RankDiscount;
use crate::rng::{child_rng, STREAM_TRAIN};

/// When pair deltas are recomputed from the current ranking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaRefresh {
    /// Refresh for every context as its minibatch is processed.
    PerMinibatch,
    /// Refresh once per epoch, before shuffling.
    PerEpoch,
}

/// Gradient-descent hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrainConfig<T: Real> {
    pub learning_rate: T,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub l2_penalty: T,
    pub delta_refresh: DeltaRefresh,
    pub seed: u64,
}

impl<T: Real> Default for TrainConfig<T> {
    fn default() -> Self {
        TrainConfig {
            learning_rate: T::of(0.5),
            epochs: 30,
            minibatch_size: 256,
            l2_penalty: T::of(1e-4),
            delta_refresh: DeltaRefresh::PerMinibatch,
            seed: 0,
        }
    }
}

impl<T: Real> TrainConfig<T> {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > T::zero()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.minibatch_size == 0 {
            return Err(Error::Config("minibatch_size must be >= 1".into()));
        }
        if !(self.l2_penalty >= T::zero()) {
            return Err(Error::Config("l2_penalty must be nonnegative".into()));
        }
        Ok(())
    }
}

/// A trained scorer with its per-epoch full-objective trace.
#[derive(Clone, Debug)]
pub struct TrainOutcome<T: Real> {
    pub scorer: ScoringFunction<T>,
    /// Objective value after each epoch (so `epochs` entries), measured
    /// on the full dataset with freshly refreshed deltas.
    pub loss_trace: Vec<T>,
}

/// Contexts that actually participate in training. Zero-weight contexts
/// contribute nothing to the objective, so they are dropped up front —
/// this also keeps shuffling, and therefore the whole run, identical
/// whether or not they were present.
fn active_contexts<T: Real>(dataset: &Dataset<T>) -> Vec<&TrainingContext<T>> {
    dataset.contexts.iter().filter(|c| c.context_weight > T::zero()).collect()
}

fn check_dims<T: Real>(scorer: &ScoringFunction<T>, contexts: &[&TrainingContext<T>]) -> Result<()> {
    for ctx in contexts {
        for item in &ctx.items {
            let got = item.features.len() + ctx.context_features.len();
            if got != scorer.input_dim() {
                return Err(Error::DimensionMismatch { expected: scorer.input_dim(), got });
            }
        }
    }
    Ok(())
}

/// Trains a scorer on the pairwise swap-delta objective.
///
/// Each epoch shuffles the active contexts, then walks minibatches of
/// `config.minibatch_size`, scaling every minibatch gradient by
/// `n_active / batch_len` so it estimates the full objective's gradient
/// regardless of batch size. Deltas are refreshed per minibatch or per
/// epoch according to `config.delta_refresh`. The trace records the full
/// objective (including the L2 term) after every epoch and training
/// aborts with an error if it ever turns non-finite.
pub fn train<T: Real>(
    dataset: &Dataset<T>,
    init: ScoringFunction<T>,
    discount: &RankDiscount<T>,
    config: &TrainConfig<T>,
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    let contexts = active_contexts(dataset);
    if contexts.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_dims(&init, &contexts)?;
    let idcg = dataset.spec.idcg_normalize;
    let n = contexts.len();
    let mut scorer = init;
    let mut trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        // E-step for the per-epoch mode: freeze deltas at this epoch's
        // starting parameters.
        let epoch_deltas: Option<Vec<Vec<PairDelta<T>>>> = match config.delta_refresh {
            DeltaRefresh::PerEpoch => Some(
                contexts
                    .par_iter()
                    .map(|ctx| context_deltas(&scorer, ctx, discount, idcg))
                    .collect::<Result<_>>()?,
            ),
            DeltaRefresh::PerMinibatch => None,
        };

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut child_rng(config.seed, STREAM_TRAIN, epoch as u64));

        for batch in order.chunks(config.minibatch_size) {
            let scale = T::of_usize(n) / T::of_usize(batch.len());
            let parts: Vec<(T, Vec<T>)> = batch
                .par_iter()
                .map(|&idx| {
                    let ctx = contexts[idx];
                    let mut grad = vec![T::zero(); scorer.n_params()];
                    let loss = match &epoch_deltas {
                        Some(all) => context_loss_and_grad(&scorer, ctx, &all[idx], &mut grad)?,
                        None => {
                            let deltas = context_deltas(&scorer, ctx, discount, idcg)?;
                            context_loss_and_grad(&scorer, ctx, &deltas, &mut grad)?
                        }
                    };
                    Ok((loss, grad))
                })
                .collect::<Result<_>>()?;
            let mut grad = vec![T::zero(); scorer.n_params()];
            for (_, g) in &parts {
                for (acc, &v) in grad.iter_mut().zip(g) {
                    *acc += v;
                }
            }
            for g in &mut grad {
                *g *= scale;
            }
            scorer.accumulate_l2_grad(config.l2_penalty, &mut grad);
            scorer.step(&grad, config.learning_rate);
        }

        let objective = full_objective(&scorer, &contexts, discount, idcg, config.l2_penalty)?;
        if !objective.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, loss: objective.widen() });
        }
        trace.push(objective);
    }
    Ok(TrainOutcome { scorer, loss_trace: trace })
}

fn full_objective<T: Real>(
    scorer: &ScoringFunction<T>,
    contexts: &[&TrainingContext<T>],
    discount: &RankDiscount<T>,
    idcg: bool,
    l2_penalty: T,
) -> Result<T> {
    let total: T = contexts
        .par_iter()
        .map(|ctx| {
            let deltas = context_deltas(scorer, ctx, discount, idcg)?;
            context_loss(scorer, ctx, &deltas)
        })
        .collect::<Result<Vec<T>>>()?
        .into_iter()
        .sum();
    Ok(total + l2_penalty / T::of(2.0) * scorer.params_squared())
}

/// Weighted binary cross-entropy loss and gradient of one context.
/// Labels must lie in `[0, 1]`.
fn pointwise_loss_and_grad<T: Real>(
    scorer: &ScoringFunction<T>,
    context: &TrainingContext<T>,
    grad: Option<&mut [T]>,
) -> Result<T> {
    let mut loss = T::zero();
    let mut grad = grad;
    for item in &context.items {
        if !(T::zero()..=T::one()).contains(&item.label) {
            return Err(Error::Config(format!(
                "pointwise training needs labels in [0, 1], item {} has {}",
                item.item_id, item.label
            )));
        }
        let s = scorer.score(&item.features, &context.context_features)?;
        // max(s, 0) - s*y + ln(1 + exp(-|s|)) is the stable form of
        // -y ln p - (1 - y) ln(1 - p) with p = sigmoid(s).
        loss += s.max(T::zero()) - s * item.label + (-s.abs()).exp().ln_1p();
        if let Some(g) = grad.as_deref_mut() {
            let p = T::one() / (T::one() + (-s).exp());
            scorer.accumulate_score_grad(
                &item.features,
                &context.context_features,
                context.context_weight * (p - item.label),
                g,
            )?;
        }
    }
    Ok(context.context_weight * loss)
}

/// Trains a zero-initialized linear scorer on weighted binary
/// cross-entropy over the dataset's raw labels.
///
/// The epoch/minibatch schedule, scaling, L2 handling, tracing, and
/// determinism guarantees match [`train`].
pub fn train_pointwise<T: Real>(
    dataset: &Dataset<T>,
    config: &TrainConfig<T>,
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    let contexts = active_contexts(dataset);
    if contexts.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dim = dataset.item_dim().unwrap_or(0) + dataset.context_dim().unwrap_or(0);
    let mut scorer = ScoringFunction::linear(dim);
    check_dims(&scorer, &contexts)?;
    let n = contexts.len();
    let mut trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut child_rng(config.seed, STREAM_TRAIN, epoch as u64));
        for batch in order.chunks(config.minibatch_size) {
            let scale = T::of_usize(n) / T::of_usize(batch.len());
            let parts: Vec<Vec<T>> = batch
                .par_iter()
                .map(|&idx| {
                    let mut grad = vec![T::zero(); scorer.n_params()];
                    pointwise_loss_and_grad(&scorer, contexts[idx], Some(&mut grad))?;
                    Ok(grad)
                })
                .collect::<Result<_>>()?;
            let mut grad = vec![T::zero(); scorer.n_params()];
            for g in &parts {
                for (acc, &v) in grad.iter_mut().zip(g) {
                    *acc += v;
                }
            }
            for g in &mut grad {
                *g *= scale;
            }
            scorer.accumulate_l2_grad(config.l2_penalty, &mut grad);
            scorer.step(&grad, config.learning_rate);
        }
        let data_loss: T = contexts
            .par_iter()
            .map(|ctx| pointwise_loss_and_grad(&scorer, ctx, None))
            .collect::<Result<Vec<T>>>()?
            .into_iter()
            .sum();
        let objective = data_loss + config.l2_penalty / T::of(2.0) * scorer.params_squared();
        if !objective.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, loss: objective.widen() });
        }
        trace.push(objective);
    }
    Ok(TrainOutcome { scorer, loss_trace: trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logs::context::ContextItem;
    use crate::reward::RewardSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Contexts where the first feature alone separates positives from
    /// negatives: positives have it near 1, negatives near -1.
    fn separable_dataset(n_contexts: usize, seed: u64) -> Dataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let contexts = (0..n_contexts)
            .map(|i| {
                let items = (0..4)
                    .map(|j| {
                        let positive = j == 0;
                        let sign = if positive { 1.0 } else { -1.0 };
                        ContextItem {
                            item_id: j,
                            features: vec![
                                sign + 0.1 * (rng.random::<f64>() - 0.5),
                                rng.random::<f64>(),
                            ],
                            label: if positive { 1.0 } else { 0.0 },
                            logged_rank: Some(j as usize + 1),
                            clicked: positive,
                        }
                    })
                    .collect();
                TrainingContext {
                    session_id: i as u64,
                    query_id: 0,
                    items,
                    context_weight: 1.0 / n_contexts as f64,
                    segment: 0,
                    context_features: vec![rng.random::<f64>()],
                }
            })
            .collect();
        Dataset { spec: RewardSpec::engagement(), contexts }
    }

    fn quick_config(refresh: DeltaRefresh) -> TrainConfig<f64> {
        TrainConfig {
            learning_rate: 0.5,
            epochs: 15,
            minibatch_size: 8,
            l2_penalty: 1e-4,
            delta_refresh: refresh,
            seed: 7,
        }
    }

    #[test]
    fn training_descends_and_learns_to_separate() {
        let dataset = separable_dataset(40, 2);
        for refresh in [DeltaRefresh::PerMinibatch, DeltaRefresh::PerEpoch] {
            let outcome = train(
                &dataset,
                ScoringFunction::linear(3),
                &RankDiscount::Log,
                &quick_config(refresh),
            )
            .unwrap();
            assert_eq!(outcome.loss_trace.len(), 15);
            let first = outcome.loss_trace[0];
            let last = *outcome.loss_trace.last().unwrap();
            assert!(last < first, "{refresh:?}: {last} !< {first}");
            // The learned scorer must put the positive on top everywhere.
            for ctx in &dataset.contexts {
                let scores: Vec<f64> = ctx
                    .items
                    .iter()
                    .map(|i| outcome.scorer.score(&i.features, &ctx.context_features).unwrap())
                    .collect();
                let best =
                    (0..4).max_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap()).unwrap();
                assert_eq!(best, 0);
            }
        }
    }

    #[test]
    fn training_is_deterministic_and_ignores_zero_weight_contexts() {
        let dataset = separable_dataset(20, 3);
        let config = quick_config(DeltaRefresh::PerMinibatch);
        let run = |ds: &Dataset<f64>| {
            train(ds, ScoringFunction::linear(3), &RankDiscount::Log, &config).unwrap()
        };
        let a = run(&dataset);
        let b = run(&dataset);
        assert_eq!(a.scorer, b.scorer);
        assert_eq!(a.loss_trace, b.loss_trace);

        let mut padded = dataset.clone();
        let mut ghost = dataset.contexts[0].clone();
        ghost.context_weight = 0.0;
        padded.contexts.insert(3, ghost);
        let c = run(&padded);
        assert_eq!(a.scorer, c.scorer);
        assert_eq!(a.loss_trace, c.loss_trace);
    }

    #[test]
    fn empty_and_all_zero_weight_datasets_are_errors() {
        let empty = Dataset::<f64> { spec: RewardSpec::engagement(), contexts: vec![] };
        let config = quick_config(DeltaRefresh::PerMinibatch);
        assert!(matches!(
            train(&empty, ScoringFunction::linear(3), &RankDiscount::Log, &config),
            Err(Error::EmptyDataset)
        ));
        let mut zeroed = separable_dataset(5, 1);
        for ctx in &mut zeroed.contexts {
            ctx.context_weight = 0.0;
        }
        assert!(matches!(
            train(&zeroed, ScoringFunction::linear(3), &RankDiscount::Log, &config),
            Err(Error::EmptyDataset)
        ));
        assert!(matches!(train_pointwise(&zeroed, &config), Err(Error::EmptyDataset)));
    }

    #[test]
    fn wrong_scorer_dimension_is_rejected() {
        let dataset = separable_dataset(5, 1);
        let config = quick_config(DeltaRefresh::PerMinibatch);
        assert!(matches!(
            train(&dataset, ScoringFunction::linear(7), &RankDiscount::Log, &config),
            Err(Error::DimensionMismatch { expected: 7, got: 3 })
        ));
    }

    #[test]
    fn invalid_hyperparameters_are_rejected() {
        let dataset = separable_dataset(5, 1);
        let bad_lr = TrainConfig { learning_rate: 0.0, ..quick_config(DeltaRefresh::PerEpoch) };
        assert!(matches!(
            train(&dataset, ScoringFunction::linear(3), &RankDiscount::Log, &bad_lr),
            Err(Error::Config(_))
        ));
        let bad_batch = TrainConfig { minibatch_size: 0, ..quick_config(DeltaRefresh::PerEpoch) };
        assert!(matches!(
            train(&dataset, ScoringFunction::linear(3), &RankDiscount::Log, &bad_batch),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn pointwise_baseline_learns_calibrated_probabilities() {
        // Every item is identical; 30% of them carry label 1 via their
        // context mix, so the optimal predictor outputs p = 0.3.
        let contexts: Vec<TrainingContext<f64>> = (0..200)
            .map(|i| TrainingContext {
                session_id: i as u64,
                query_id: 0,
                items: vec![
                    ContextItem {
                        item_id: 0,
                        features: vec![1.0],
                        label: if i % 10 < 3 { 1.0 } else { 0.0 },
                        logged_rank: Some(1),
                        clicked: i % 10 < 3,
                    },
                    ContextItem {
                        item_id: 1,
                        features: vec![1.0],
                        label: if i % 10 < 3 { 1.0 } else { 0.0 },
                        logged_rank: Some(2),
                        clicked: i % 10 < 3,
                    },
                ],
                context_weight: 1.0 / 200.0,
                segment: 0,
                context_features: vec![],
            })
            .collect();
        let dataset = Dataset { spec: RewardSpec::engagement(), contexts };
        let config = TrainConfig {
            learning_rate: 1.0,
            epochs: 120,
            minibatch_size: 200,
            l2_penalty: 0.0,
            delta_refresh: DeltaRefresh::PerMinibatch,
            seed: 4,
        };
        let outcome = train_pointwise(&dataset, &config).unwrap();
        let s = outcome.scorer.score(&[1.0], &[]).unwrap();
        let p = 1.0 / (1.0 + (-s).exp());
        assert!((p - 0.3).abs() < 0.01, "predicted {p}, want 0.3");
        assert!(outcome.loss_trace.last().unwrap() < &outcome.loss_trace[0]);
    }

    #[test]
    fn pointwise_rejects_labels_outside_unit_interval() {
        let mut dataset = separable_dataset(5, 6);
        dataset.contexts[0].items[0].label = 2.5;
        let config = quick_config(DeltaRefresh::PerMinibatch);
        assert!(matches!(train_pointwise(&dataset, &config), Err(Error::Config(_))));
    }
}
