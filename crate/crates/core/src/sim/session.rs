//! Retrieval, ranking, and whole-session simulation.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::logs::{ItemRecord, PurchaseRecord, QueryRecord, SessionRecord};
use crate::num::Real;
use crate::policy::{rank_by_scores, Policy};
use crate::rng::{child_rng, STREAM_INTENT};
use crate::sim::click::{simulate_page, PageOutcome};
use crate::sim::{sample_intent, Item, ItemCatalog, SimConfig, UserIntent};
use crate::{Error, Result};

/// Length of the query-level feature vector given to scorers: position
/// in session, engagement so far, and a one-hot of the shopper's
/// declared price segment.
pub fn context_dim(n_buckets: usize) -> usize {
    2 + n_buckets
}

/// How the platform orders retrieved candidates.
#[derive(Clone, Debug)]
pub enum RankingPolicy<T: Real> {
    /// Uniformly random permutation; the exploration logger.
    Random,
    /// Descending true click probability.
    Oracle,
    /// Oracle scores perturbed with Gaussian noise of this scale;
    /// stands in for a decent but imperfect production ranker.
    OracleNoisy { noise: T },
    /// A learned scorer operating on observable features only.
    Model(Policy<T>),
}

impl<T: Real> RankingPolicy<T> {
    /// Returns candidate indices in display order.
    pub fn order(
        &self,
        candidates: &[&Item<T>],
        intent: &UserIntent<T>,
        context_features: &[T],
        config: &SimConfig<T>,
        rng: &mut impl Rng,
    ) -> Result<Vec<usize>> {
        if candidates.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        let ids: Vec<u64> = candidates.iter().map(|item| item.item_id).collect();
        match self {
            RankingPolicy::Random => {
                let mut order: Vec<usize> = (0..candidates.len()).collect();
                order.shuffle(rng);
                Ok(order)
            }
            RankingPolicy::Oracle => {
                let scores: Vec<T> = candidates
                    .iter()
                    .map(|item| config.click.relevance_prob(item, intent))
                    .collect::<Result<_>>()?;
                Ok(rank_by_scores(&scores, &ids))
            }
            RankingPolicy::OracleNoisy { noise } => {
                let scores: Vec<T> = candidates
                    .iter()
                    .map(|item| {
                        let rel = config.click.relevance_prob(item, intent)?;
                        let draw: f64 = rng.sample(StandardNormal);
                        Ok(rel + *noise * T::of(draw))
                    })
                    .collect::<Result<_>>()?;
                Ok(rank_by_scores(&scores, &ids))
            }
            RankingPolicy::Model(policy) => {
                let pairs: Vec<(u64, &[T])> = candidates
                    .iter()
                    .map(|item| (item.item_id, item.features.as_slice()))
                    .collect();
                policy.rank(&pairs, context_features)
            }
        }
    }
}

/// Scores the whole catalog for one query and returns the indices of
/// the top `retrieval_k` candidates.
///
/// Retrieval sees the latent quality (a stand-in for a mature candidate
/// generator) but is noisy, so relevant items routinely appear at
/// unflattering positions and ranking has real work to do.
fn retrieve<T: Real>(
    catalog: &ItemCatalog<T>,
    intent: &UserIntent<T>,
    config: &SimConfig<T>,
    rng: &mut impl Rng,
) -> Vec<usize> {
    let ln_target = intent.target_price.widen().ln();
    let scores: Vec<T> = catalog
        .items
        .iter()
        .map(|item| {
            let affinity: T = item
                .quality
                .iter()
                .zip(&intent.intent_vector)
                .map(|(&q, &v)| q * v)
                .sum();
            let mismatch = T::of((item.price.widen().ln() - ln_target).abs());
            let draw: f64 = rng.sample(StandardNormal);
            affinity - config.retrieval_price_damping * mismatch
                + config.retrieval_noise * T::of(draw)
        })
        .collect();
    let ids: Vec<u64> = catalog.items.iter().map(|item| item.item_id).collect();
    let mut order = rank_by_scores(&scores, &ids);
    order.truncate(config.retrieval_k);
    order
}

/// Ranks candidates with `policy` and runs the shopper over the page.
///
/// Returns the full candidate ordering and the page outcome; only the
/// first `n_slots` positions of the ordering form the page.
pub fn simulate_serp<T: Real>(
    policy: &RankingPolicy<T>,
    candidates: &[&Item<T>],
    intent: &UserIntent<T>,
    context_features: &[T],
    config: &SimConfig<T>,
    rng: &mut impl Rng,
) -> Result<(Vec<usize>, PageOutcome)> {
    let order = policy.order(candidates, intent, context_features, config, rng)?;
    let page: Vec<&Item<T>> = order
        .iter()
        .take(config.n_slots)
        .map(|&idx| candidates[idx])
        .collect();
    let outcome = simulate_page(&config.click, intent, &page, rng)?;
    Ok((order, outcome))
}

/// Simulates one full session and emits its log record.
///
/// Each query retrieves from the catalog, the policy builds the page,
/// the shopper examines/clicks/maybe buys, and a purchase ends the
/// session early.
pub fn simulate_session<T: Real>(
    policy: &RankingPolicy<T>,
    catalog: &ItemCatalog<T>,
    intent: &UserIntent<T>,
    config: &SimConfig<T>,
    session_id: u64,
    rng: &mut impl Rng,
) -> Result<SessionRecord<T>> {
    let mut queries = Vec::with_capacity(intent.browse_depth);
    let mut purchase = None;
    let mut prior_clicks = 0usize;

    for query_id in 0..intent.browse_depth {
        let retrieved = retrieve(catalog, intent, config, rng);
        let candidates: Vec<&Item<T>> =
            retrieved.iter().map(|&idx| &catalog.items[idx]).collect();
        let mut context_features = vec![
            T::of_usize(query_id) / T::of_usize(config.max_queries),
            T::of_usize(prior_clicks.min(10)) / T::of(10.0),
        ];
        context_features.extend(
            (0..config.n_buckets)
                .map(|b| if b == intent.price_intent_bucket { T::one() } else { T::zero() }),
        );

        let (order, outcome) =
            simulate_serp(policy, &candidates, intent, &context_features, config, rng)?;
        let page_len = order.len().min(config.n_slots);

        let mut impressed = vec![false; candidates.len()];
        for &idx in order.iter().take(page_len) {
            impressed[idx] = true;
        }
        let records: Vec<ItemRecord<T>> = candidates
            .iter()
            .enumerate()
            .map(|(idx, item)| {
                let soft_relevance = if config.log_soft_relevance {
                    Some(config.click.relevance_prob(item, intent)?)
                } else {
                    None
                };
                Ok(ItemRecord {
                    item_id: item.item_id,
                    features: item.features.clone(),
                    price: item.price,
                    impressed: impressed[idx],
                    soft_relevance,
                })
            })
            .collect::<Result<_>>()?;

        let ranking: Vec<u64> = order
            .iter()
            .take(page_len)
            .map(|&idx| candidates[idx].item_id)
            .collect();
        let clicks: Vec<usize> =
            (0..page_len).filter(|&slot| outcome.clicked[slot]).collect();
        prior_clicks += clicks.len();

        if let Some(slot) = outcome.purchased {
            let item = candidates[order[slot]];
            purchase = Some(PurchaseRecord {
                item_id: item.item_id,
                price: item.price,
                query_id: query_id as u32,
            });
        }

        queries.push(QueryRecord {
            query_id: query_id as u32,
            candidates: records,
            ranking,
            clicks,
            context_features,
        });

        if purchase.is_some() {
            break;
        }
    }

    Ok(SessionRecord {
        session_id,
        intent_bucket: intent.price_intent_bucket,
        queries,
        purchase,
    })
}

/// Simulates `n_sessions` sessions in parallel, deterministically.
///
/// Session `i` draws its shopper from stream `STREAM_INTENT` at index
/// `i` and its behaviour (retrieval noise, policy noise, examinations,
/// clicks, purchases) from `behavior_stream` at index `i`. Two runs
/// with the same seed and streams are identical regardless of thread
/// count; two policies given the same seed face the same shoppers.
pub fn simulate_batch<T: Real>(
    policy: &RankingPolicy<T>,
    catalog: &ItemCatalog<T>,
    config: &SimConfig<T>,
    n_sessions: usize,
    seed: u64,
    behavior_stream: u64,
) -> Result<Vec<SessionRecord<T>>> {
    config.validate()?;
    (0..n_sessions)
        .into_par_iter()
        .map(|i| {
            let mut intent_rng = child_rng(seed, STREAM_INTENT, i as u64);
            let intent = sample_intent(config, &mut intent_rng)?;
            let mut behavior_rng = child_rng(seed, behavior_stream, i as u64);
            simulate_session(policy, catalog, &intent, config, i as u64, &mut behavior_rng)
        })
        .collect()
}
