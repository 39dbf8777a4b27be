//! Session values, context weights, and label debiasing.
//!
//! The estimation chain runs: session outcome -> session value (by reward
//! kind) -> per-query weight (value times attributed credit, clipped) ->
//! optional self-normalization over the whole dataset. Independently of
//! weights, per-item labels can be divided by their examination
//! propensity to undo position bias, with a cap on the multiplier.

use crate::error::{Error, Result};
use crate::logs::context::TrainingContext;
use crate::logs::records::SessionRecord;
use crate::num::Real;
use crate::reward::attribution::AttributionDistribution;
use crate::reward::buckets::ValueBuckets;
use crate::reward::discount::RankDiscount;
use crate::reward::{RewardKind, RewardSpec};

/// Value of a whole session under the spec's reward kind.
///
/// Engagement counts sessions with a click, purchase counts conversions,
/// and revenue pays a converting session its bucket share (which needs
/// fitted `buckets`). Non-qualifying sessions are worth zero.
pub fn session_value<T: Real>(
    session: &SessionRecord<T>,
    spec: &RewardSpec<T>,
    buckets: Option<&ValueBuckets<T>>,
) -> Result<T> {
    match spec.kind {
        RewardKind::Engagement => {
            Ok(if session.has_click() { T::one() } else { T::zero() })
        }
        RewardKind::Purchase => {
            Ok(if session.purchase.is_some() { T::one() } else { T::zero() })
        }
        RewardKind::Revenue => match &session.purchase {
            None => Ok(T::zero()),
            Some(purchase) => {
                let buckets = buckets.ok_or_else(|| {
                    Error::Config("revenue reward requires fitted value buckets".into())
                })?;
                Ok(buckets.session_share(purchase.price))
            }
        },
    }
}

/// Weight of one query context: session value times the query's
/// attributed credit, clipped at the spec's cap.
pub fn context_weight<T: Real>(
    session: &SessionRecord<T>,
    query_id: u32,
    spec: &RewardSpec<T>,
    attribution: &AttributionDistribution<T>,
    buckets: Option<&ValueBuckets<T>>,
) -> Result<T> {
    let value = session_value(session, spec, buckets)?;
    Ok(spec.clip(value * attribution.get(query_id)))
}

/// Rescales weights to sum to one. Weights must be nonnegative with a
/// positive total.
pub fn normalize_weights<T: Real>(weights: &[T]) -> Result<Vec<T>> {
    let total: T = weights.iter().copied().sum();
    if total <= T::zero() {
        return Err(Error::AllZeroWeights);
    }
    Ok(weights.iter().map(|&w| w / total).collect())
}

/// Inverse-propensity debiased labels for one context.
///
/// A clicked item's label is divided by the examination propensity of the
/// rank it was logged at, so items that were clicked despite poor
/// placement count for more; the multiplier is capped at `spec.debias_cap`
/// to bound variance. Labels that do not come from clicks — negatives and
/// attributed positives that were never impressed — pass through
/// unchanged. A clicked item without a logged rank has no defined
/// propensity and is an error.
pub fn debias_labels<T: Real>(
    context: &TrainingContext<T>,
    propensity: &RankDiscount<T>,
    spec: &RewardSpec<T>,
) -> Result<Vec<T>> {
    context
        .items
        .iter()
        .map(|item| {
            if !item.clicked {
                return Ok(item.label);
            }
            let rank = item
                .logged_rank
                .ok_or(Error::MissingLoggedRank { item_id: item.item_id })?;
            let multiplier = (T::one() / propensity.at(rank)?).min(spec.debias_cap);
            Ok(item.label * multiplier)
        })
        .collect()
}

/// Applies [`debias_labels`] to every context of a dataset in place.
pub fn debias_dataset<T: Real>(
    dataset: &mut crate::logs::context::Dataset<T>,
    propensity: &RankDiscount<T>,
) -> Result<()> {
    let spec = dataset.spec.clone();
    for context in &mut dataset.contexts {
        let labels = debias_labels(context, propensity, &spec)?;
        for (item, label) in context.items.iter_mut().zip(labels) {
            item.label = label;
        }
    }
    Ok(())
}
