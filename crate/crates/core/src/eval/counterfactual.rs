//! Single-policy counterfactual estimates and the position-IPW click
//! diagnostic.

use std::collections::HashMap;

use rayon::iter::{IntoParallelIterator, IntoParallelRefIterator, ParallelIterator};

use crate::error::{Error, Result};
use crate::eval::{ContextRanker, Metric, MetricEstimate};
use crate::logs::context::{ContextItem, Dataset, TrainingContext};
use crate::logs::records::SessionRecord;
use crate::num::Real;
use crate::reward::{per_query_expected_reward, RankDiscount, RewardSpec};
use crate::stats::{percentile_ci, resample_indices, BootstrapConfig};

/// Replays the logging policy's own order: displayed items by their
/// logged rank, then retrieved-but-unshown items in stored order.
pub struct LoggedOrder;

impl<T: Real> ContextRanker<T> for LoggedOrder {
    fn order(&self, context: &TrainingContext<T>) -> Result<Vec<usize>> {
        let mut idx: Vec<usize> = (0..context.items.len()).collect();
        idx.sort_by_key(|&i| (context.items[i].logged_rank.unwrap_or(usize::MAX), i));
        Ok(idx)
    }
}

/// Contexts grouped by their originating session, in first-appearance
/// order. Evaluation aggregates and bootstrap resampling both work on
/// these per-session rows.
pub(crate) struct SessionFrame<T: Real> {
    /// Session slot of each context, parallel to `Dataset::contexts`.
    pub slot_of_context: Vec<usize>,
    /// Price-intent segment of each session.
    pub segment: Vec<usize>,
    /// Total context weight of each session.
    pub weight: Vec<T>,
}

impl<T: Real> SessionFrame<T> {
    pub fn build(eval_set: &Dataset<T>) -> Self {
        let mut slots: HashMap<u64, usize> = HashMap::new();
        let mut slot_of_context = Vec::with_capacity(eval_set.contexts.len());
        let mut segment = Vec::new();
        let mut weight = Vec::new();
        for ctx in &eval_set.contexts {
            let slot = *slots.entry(ctx.session_id).or_insert_with(|| {
                segment.push(ctx.segment);
                weight.push(T::zero());
                segment.len() - 1
            });
            weight[slot] += ctx.context_weight;
            slot_of_context.push(slot);
        }
        SessionFrame { slot_of_context, segment, weight }
    }

    pub fn n_sessions(&self) -> usize {
        self.segment.len()
    }

    /// Sums weighted per-context rewards into per-session values.
    pub fn fold(&self, weighted: &[T]) -> Vec<T> {
        let mut values = vec![T::zero(); self.n_sessions()];
        for (&slot, &v) in self.slot_of_context.iter().zip(weighted) {
            values[slot] += v;
        }
        values
    }
}

/// Weighted per-context rewards under `ranker`, in context order.
pub(crate) fn weighted_rewards<T: Real>(
    eval_set: &Dataset<T>,
    ranker: &(impl ContextRanker<T> + Sync),
    discount: &RankDiscount<T>,
) -> Result<Vec<T>> {
    eval_set
        .contexts
        .par_iter()
        .map(|ctx| {
            let order = ranker.order(ctx)?;
            let labels: Vec<T> = ctx.items.iter().map(|i| i.label).collect();
            let reward =
                per_query_expected_reward(&order, &labels, discount, eval_set.spec.idcg_normalize)?;
            Ok(ctx.context_weight * reward)
        })
        .collect()
}

/// Aggregate of the chosen sessions: the weighted mean of per-query
/// rewards under self-normalization, the plain weighted sum otherwise.
/// `None` when the chosen sessions carry no weight to normalize by.
pub(crate) fn estimate_over<T: Real>(
    values: &[T],
    weights: &[T],
    chosen: &[usize],
    self_normalize: bool,
) -> Option<T> {
    let total: T = chosen.iter().map(|&i| values[i]).sum();
    if !self_normalize {
        return Some(total);
    }
    let mass: T = chosen.iter().map(|&i| weights[i]).sum();
    (mass > T::zero()).then(|| total / mass)
}

/// Counterfactual estimate of one policy's metric on a held-out eval set.
///
/// Every context is re-ranked by `ranker` and scored with the
/// discount-weighted sum of its debiased labels under the new order,
/// normalized per the set's reward spec. The bootstrap interval comes
/// from resampling whole sessions.
pub fn counterfactual_metric<T: Real>(
    eval_set: &Dataset<T>,
    ranker: &(impl ContextRanker<T> + Sync),
    spec: &RewardSpec<T>,
    discount: &RankDiscount<T>,
    bootstrap: &BootstrapConfig,
) -> Result<MetricEstimate<T>> {
    eval_set.check_spec(spec)?;
    if eval_set.contexts.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let frame = SessionFrame::build(eval_set);
    let values = frame.fold(&weighted_rewards(eval_set, ranker, discount)?);
    let all: Vec<usize> = (0..values.len()).collect();
    let value = estimate_over(&values, &frame.weight, &all, spec.self_normalize)
        .ok_or(Error::AllZeroWeights)?;
    let replicates: Vec<f64> = (0..bootstrap.replicates)
        .into_par_iter()
        .filter_map(|r| {
            let chosen = resample_indices(values.len(), &mut bootstrap.replicate_rng(r));
            estimate_over(&values, &frame.weight, &chosen, spec.self_normalize)
                .map(Real::widen)
        })
        .collect();
    let (ci_low, ci_high) = percentile_ci(&replicates, value.widen(), bootstrap);
    Ok(MetricEstimate {
        metric: Metric::of_kind(spec.kind),
        value,
        n_contexts: eval_set.contexts.len(),
        ci_low: T::of(ci_low),
        ci_high: T::of(ci_high),
    })
}

/// Position-debiased estimate of a ranker's expected clicks per query,
/// from logs gathered under a randomized logging policy.
///
/// Each logged click is reweighted by the ratio of the examination
/// probability its item would enjoy at the candidate order's rank to the
/// probability at its logged rank; averaging over queries estimates the
/// click count per query the candidate policy would collect online. The
/// estimate is exact for fully displayed slates. When retrieval runs
/// deeper than the page, never-displayed candidates contribute nothing,
/// which understates policies that promote them.
///
/// Sessions whose clicks do not resolve to a displayed candidate record
/// are rejected as malformed rather than silently dropped, since a lost
/// click would bias the estimate.
pub fn ipw_expected_clicks<T: Real>(
    sessions: &[SessionRecord<T>],
    ranker: &(impl ContextRanker<T> + Sync),
    examination: &RankDiscount<T>,
) -> Result<T> {
    let per_session: Vec<(T, usize)> = sessions
        .par_iter()
        .map(|session| -> Result<(T, usize)> {
            let mut total = T::zero();
            for query in &session.queries {
                let ctx = query_context(session, query);
                let order = ranker.order(&ctx)?;
                let mut new_rank = vec![0usize; ctx.items.len()];
                for (slot, &idx) in order.iter().enumerate() {
                    new_rank[idx] = slot + 1;
                }
                for &slot in &query.clicks {
                    let item_id = query.ranking.get(slot).copied().ok_or_else(|| {
                        Error::MalformedSession {
                            session_id: session.session_id,
                            detail: format!(
                                "query {}: click slot {slot} is outside the displayed page",
                                query.query_id
                            ),
                        }
                    })?;
                    let idx = ctx
                        .items
                        .iter()
                        .position(|i| i.item_id == item_id)
                        .ok_or_else(|| Error::MalformedSession {
                            session_id: session.session_id,
                            detail: format!(
                                "query {}: clicked item {item_id} has no candidate record",
                                query.query_id
                            ),
                        })?;
                    total += examination.at(new_rank[idx])? / examination.at(slot + 1)?;
                }
            }
            Ok((total, session.queries.len()))
        })
        .collect::<Result<_>>()?;
    let n_queries: usize = per_session.iter().map(|&(_, n)| n).sum();
    if n_queries == 0 {
        return Err(Error::EmptyDataset);
    }
    let total: T = per_session.iter().map(|&(v, _)| v).sum();
    Ok(total / T::of_usize(n_queries))
}

/// Plain per-query click rate of a batch of sessions — the on-policy
/// Monte Carlo counterpart of [`ipw_expected_clicks`].
pub fn mean_clicks_per_query<T: Real>(sessions: &[SessionRecord<T>]) -> Result<T> {
    let n_queries: usize = sessions.iter().map(|s| s.queries.len()).sum();
    if n_queries == 0 {
        return Err(Error::EmptyDataset);
    }
    let clicks: usize = sessions.iter().map(SessionRecord::click_count).sum();
    Ok(T::of_usize(clicks) / T::of_usize(n_queries))
}

/// A throwaway unweighted context wrapping one logged query, so rankers
/// can re-rank raw sessions without the reward pipeline.
fn query_context<T: Real>(
    session: &SessionRecord<T>,
    query: &crate::logs::records::QueryRecord<T>,
) -> TrainingContext<T> {
    let clicked: Vec<u64> = query.clicked_item_ids().collect();
    let items = query
        .candidates
        .iter()
        .map(|c| ContextItem {
            item_id: c.item_id,
            features: c.features.clone(),
            label: T::zero(),
            logged_rank: query.logged_rank(c.item_id),
            clicked: clicked.contains(&c.item_id),
        })
        .collect();
    TrainingContext {
        session_id: session.session_id,
        query_id: query.query_id,
        items,
        context_weight: T::one(),
        segment: session.intent_bucket,
        context_features: query.context_features.clone(),
    }
}
