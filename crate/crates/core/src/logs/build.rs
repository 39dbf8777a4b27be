//! Assembly of training and evaluation datasets from session logs.
//!
//! Both builders run the same outer loop: find each session's success
//! item for the spec's reward kind, spread the session's value over its
//! queries with the spec's attribution scheme, and emit one weighted
//! context per credited query. They differ in the item pool: training
//! contexts hold the engaged items plus a small random sample of
//! impressed-but-unengaged negatives, while evaluation contexts keep
//! every retrieved candidate so a policy can be scored on the full slate.

use std::collections::BTreeSet;

use rand::Rng;

use crate::error::Result;
use crate::logs::context::{ContextItem, Dataset, TrainingContext};
use crate::logs::records::{QueryRecord, SessionRecord};
use crate::num::Real;
use crate::reward::{
    attribute, fit_value_buckets, normalize_weights, session_value, AttributionKind,
    AttributionScheme, LabelSource, MarkovModel, RewardKind, RewardSpec, ValueBuckets,
};

/// Corpus-level statistics some specs need before any context exists.
struct CorpusFits<T: Real> {
    buckets: Option<ValueBuckets<T>>,
    markov: Option<MarkovModel>,
}

impl<T: Real> CorpusFits<T> {
    fn fit(sessions: &[SessionRecord<T>], spec: &RewardSpec<T>) -> Result<Self> {
        let buckets = match spec.kind {
            RewardKind::Revenue => Some(fit_value_buckets(sessions, spec.n_value_buckets)?),
            _ => None,
        };
        let markov = match spec.attribution {
            AttributionKind::MarkovMultiTouch => Some(MarkovModel::fit(sessions)),
            _ => None,
        };
        Ok(CorpusFits { buckets, markov })
    }

    fn scheme(&self) -> AttributionScheme<'_> {
        match &self.markov {
            Some(model) => AttributionScheme::MarkovMultiTouch(model),
            None => AttributionScheme::LastTouch,
        }
    }
}

/// The item whose presence defines success for this session, if any:
/// the purchased item for purchase and revenue rewards, the last
/// clicked item for engagement.
fn success_item<T: Real>(session: &SessionRecord<T>, kind: RewardKind) -> Option<u64> {
    match kind {
        RewardKind::Engagement => session.last_clicked().map(|(_, item)| item),
        RewardKind::Purchase | RewardKind::Revenue => {
            session.purchase.as_ref().map(|p| p.item_id)
        }
    }
}

/// Builds a weighted training set from logged sessions.
///
/// Sessions without a success outcome contribute nothing. Each credited
/// query becomes a context holding its engaged items (labeled per the
/// spec) plus up to `negatives_per_context` impressed-but-unengaged items
/// at label zero, sampled without replacement through `rng`. Contexts
/// need at least two items and one positive label to be emitted. When
/// the spec self-normalizes, the surviving weights are rescaled to sum
/// to one. Empty logs yield an empty dataset.
pub fn build_training_set<T: Real>(
    sessions: &[SessionRecord<T>],
    spec: &RewardSpec<T>,
    negatives_per_context: usize,
    rng: &mut impl Rng,
) -> Result<Dataset<T>> {
    build_dataset(sessions, spec, Some((negatives_per_context, rng)))
}

/// Builds an evaluation set: same sessions, weights, and labels as
/// [`build_training_set`], but every context keeps all retrieved
/// candidates (impressed or not), so training pools are subsets of their
/// evaluation counterparts.
pub fn build_eval_set<T: Real>(
    sessions: &[SessionRecord<T>],
    spec: &RewardSpec<T>,
) -> Result<Dataset<T>> {
    build_dataset::<T, rand_chacha::ChaCha8Rng>(sessions, spec, None)
}

fn build_dataset<T: Real, R: Rng>(
    sessions: &[SessionRecord<T>],
    spec: &RewardSpec<T>,
    mut negatives: Option<(usize, &mut R)>,
) -> Result<Dataset<T>> {
    let fits = CorpusFits::fit(sessions, spec)?;
    let mut contexts: Vec<TrainingContext<T>> = Vec::new();
    for session in sessions {
        let Some(success) = success_item(session, spec.kind) else { continue };
        let value = session_value(session, spec, fits.buckets.as_ref())?;
        if value <= T::zero() {
            continue;
        }
        let scheme = match spec.attribution {
            AttributionKind::LastTouch => AttributionScheme::LastTouch,
            AttributionKind::AllTouch => AttributionScheme::AllTouch,
            AttributionKind::MarkovMultiTouch => fits.scheme(),
        };
        let credit = attribute(session, success, scheme)?;
        for (query_id, mass) in credit.iter() {
            if mass <= T::zero() {
                continue;
            }
            let Some(query) = session.queries.iter().find(|q| q.query_id == query_id) else {
                continue;
            };
            let items = match &mut negatives {
                Some((n, rng)) => training_items(session, query, spec, success, *n, *rng),
                None => eval_items(session, query, spec, success),
            };
            let Some(items) = items else { continue };
            contexts.push(TrainingContext {
                session_id: session.session_id,
                query_id,
                items,
                context_weight: spec.clip(value * mass),
                segment: session.intent_bucket,
                context_features: query.context_features.clone(),
            });
        }
    }
    if spec.self_normalize && !contexts.is_empty() {
        let weights: Vec<T> = contexts.iter().map(|c| c.context_weight).collect();
        for (ctx, w) in contexts.iter_mut().zip(normalize_weights(&weights)?) {
            ctx.context_weight = w;
        }
    }
    Ok(Dataset { spec: spec.clone(), contexts })
}

/// Engaged items with their labels for one context, before negatives.
///
/// Returns `(item_id, label, clicked)` triples. For engagement rewards
/// every clicked item is a full positive. For purchase/revenue rewards
/// the success item is the full positive — whether or not this query
/// impressed it — and other clicked items get the partial label.
fn positive_items<T: Real>(
    query: &QueryRecord<T>,
    spec: &RewardSpec<T>,
    success: u64,
) -> Vec<(u64, T, bool)> {
    let clicked: Vec<u64> = query.clicked_item_ids().collect();
    match spec.kind {
        RewardKind::Engagement => {
            clicked.iter().map(|&id| (id, T::one(), true)).collect()
        }
        RewardKind::Purchase | RewardKind::Revenue => {
            let mut items = vec![(success, T::one(), clicked.contains(&success))];
            items.extend(
                clicked
                    .iter()
                    .filter(|&&id| id != success)
                    .map(|&id| (id, spec.partial_label, true)),
            );
            items
        }
    }
}

fn make_item<T: Real>(
    session: &SessionRecord<T>,
    query: &QueryRecord<T>,
    spec: &RewardSpec<T>,
    item_id: u64,
    label: T,
    clicked: bool,
) -> Option<ContextItem<T>> {
    // Attributed success items may not be candidates of this query;
    // their static features come from whichever query retrieved them.
    let record = query.candidate(item_id).or_else(|| session.any_candidate_record(item_id))?;
    let label = match spec.label_source {
        LabelSource::Clicks => label,
        LabelSource::Soft => record.soft_relevance.unwrap_or(label),
    };
    Some(ContextItem {
        item_id,
        features: record.features.clone(),
        label,
        logged_rank: query.logged_rank(item_id),
        clicked,
    })
}

fn training_items<T: Real>(
    session: &SessionRecord<T>,
    query: &QueryRecord<T>,
    spec: &RewardSpec<T>,
    success: u64,
    negatives_per_context: usize,
    rng: &mut impl Rng,
) -> Option<Vec<ContextItem<T>>> {
    let positives = positive_items(query, spec, success);
    let mut used: BTreeSet<u64> = positives.iter().map(|&(id, _, _)| id).collect();
    let mut items: Vec<ContextItem<T>> = positives
        .into_iter()
        .filter_map(|(id, label, clicked)| make_item(session, query, spec, id, label, clicked))
        .collect();
    if items.is_empty() {
        return None;
    }

    let pool: Vec<u64> =
        query.ranking.iter().copied().filter(|id| !used.contains(id)).collect();
    let chosen: Vec<u64> = if pool.len() <= negatives_per_context {
        pool
    } else {
        let mut picks = rand::seq::index::sample(rng, pool.len(), negatives_per_context)
            .into_vec();
        picks.sort_unstable();
        picks.into_iter().map(|i| pool[i]).collect()
    };
    for id in chosen {
        used.insert(id);
        if let Some(item) = make_item(session, query, spec, id, T::zero(), false) {
            items.push(item);
        }
    }
    (items.len() >= 2).then_some(items)
}

fn eval_items<T: Real>(
    session: &SessionRecord<T>,
    query: &QueryRecord<T>,
    spec: &RewardSpec<T>,
    success: u64,
) -> Option<Vec<ContextItem<T>>> {
    let positives = positive_items(query, spec, success);
    let label_of = |id: u64| -> (T, bool) {
        positives
            .iter()
            .find(|&&(pid, _, _)| pid == id)
            .map(|&(_, label, clicked)| (label, clicked))
            .unwrap_or((T::zero(), false))
    };
    let mut items: Vec<ContextItem<T>> = query
        .candidates
        .iter()
        .map(|c| {
            let (label, clicked) = label_of(c.item_id);
            make_item(session, query, spec, c.item_id, label, clicked)
                .expect("candidate record exists for its own query")
        })
        .collect();
    // An attributed success item missing from this query's candidates
    // still belongs in the slate.
    if !items.iter().any(|i| i.item_id == success) {
        if let Some(item) = make_item(session, query, spec, success, T::one(), false) {
            items.push(item);
        }
    }
    let has_positive = items.iter().any(|i| i.label > T::zero());
    (items.len() >= 2 && has_positive).then_some(items)
}
