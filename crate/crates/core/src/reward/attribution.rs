//! Credit assignment from a session outcome back to its queries.
//!
//! A session that ends in a click or purchase owes that outcome to some
//! of the queries along the way. An [`AttributionDistribution`] spreads
//! one unit of credit over the session's query ids; the scheme decides
//! how: all on the engaging query (last touch), evenly over every query
//! that surfaced the success item (all touch), or proportional to journey
//! removal effects (Markov multi-touch).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::logs::records::SessionRecord;
use crate::num::Real;
use crate::reward::markov::{query_state, MarkovModel};

/// How to spread credit over a session's queries.
#[derive(Clone, Copy, Debug)]
pub enum AttributionScheme<'a> {
    LastTouch,
    AllTouch,
    MarkovMultiTouch(&'a MarkovModel),
}

/// A probability distribution over the query ids of one session.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributionDistribution<T: Real> {
    mass: BTreeMap<u32, T>,
}

impl<T: Real> AttributionDistribution<T> {
    /// All credit on a single query.
    pub fn point(query_id: u32) -> Self {
        AttributionDistribution { mass: BTreeMap::from([(query_id, T::one())]) }
    }

    /// Equal credit over the given queries. Duplicates are merged.
    pub fn uniform(query_ids: &[u32]) -> Self {
        let share = T::one() / T::of_usize(query_ids.len());
        let mut mass = BTreeMap::new();
        for &q in query_ids {
            *mass.entry(q).or_insert_with(T::zero) += share;
        }
        AttributionDistribution { mass }
    }

    /// Credit proportional to nonnegative weights. All-zero weights fall
    /// back to uniform credit over the same queries.
    pub fn proportional(weighted: &[(u32, T)]) -> Self {
        let total: T = weighted.iter().map(|&(_, w)| w).sum();
        if total <= T::zero() {
            let ids: Vec<u32> = weighted.iter().map(|&(q, _)| q).collect();
            return Self::uniform(&ids);
        }
        let mut mass = BTreeMap::new();
        for &(q, w) in weighted {
            *mass.entry(q).or_insert_with(T::zero) += w / total;
        }
        AttributionDistribution { mass }
    }

    /// Credit assigned to one query (zero when absent).
    pub fn get(&self, query_id: u32) -> T {
        self.mass.get(&query_id).copied().unwrap_or_else(T::zero)
    }

    /// Queries with their credit, in ascending query order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, T)> + '_ {
        self.mass.iter().map(|(&q, &m)| (q, m))
    }

    /// Total credit; 1 up to rounding for every constructor.
    pub fn total(&self) -> T {
        self.mass.values().copied().sum()
    }
}

/// Spreads one unit of credit for `success_item` over the session's
/// queries according to `scheme`.
///
/// Last touch anchors on the engaging query: the purchase query when the
/// success item is the purchased item, otherwise the last query where it
/// was clicked, otherwise the last query that retrieved it. All touch
/// spreads evenly over the queries that retrieved the item, falling back
/// to last touch (with a warning) when retrieval logs never contain it.
/// Markov multi-touch weighs the retrieving queries by the removal
/// effect of their journey states, with the same retrieval fallback.
pub fn attribute<T: Real>(
    session: &SessionRecord<T>,
    success_item: u64,
    scheme: AttributionScheme<'_>,
) -> Result<AttributionDistribution<T>> {
    if session.queries.is_empty() {
        return Err(Error::Config(format!(
            "session {} has no queries to attribute to",
            session.session_id
        )));
    }
    match scheme {
        AttributionScheme::LastTouch => Ok(AttributionDistribution::point(last_touch_query(
            session,
            success_item,
        ))),
        AttributionScheme::AllTouch => {
            let retrieving = session.queries_retrieving(success_item);
            if retrieving.is_empty() {
                log::warn!(
                    "item {success_item} was never retrieved in session {}; falling back to last touch",
                    session.session_id
                );
                return attribute(session, success_item, AttributionScheme::LastTouch);
            }
            Ok(AttributionDistribution::uniform(&retrieving))
        }
        AttributionScheme::MarkovMultiTouch(model) => {
            let retrieving = session.queries_retrieving(success_item);
            if retrieving.is_empty() {
                log::warn!(
                    "item {success_item} was never retrieved in session {}; falling back to last touch",
                    session.session_id
                );
                return attribute(session, success_item, AttributionScheme::LastTouch);
            }
            let len = session.queries.len();
            let weighted: Vec<(u32, T)> = retrieving
                .iter()
                .filter_map(|&qid| {
                    let query = session.queries.iter().find(|q| q.query_id == qid)?;
                    let effect = model.removal_effect(query_state(query, len));
                    Some((qid, T::of(effect)))
                })
                .collect();
            Ok(AttributionDistribution::proportional(&weighted))
        }
    }
}

/// The engaging query for `success_item`, by decreasing directness:
/// purchase query, last click query, last retrieving query, last query.
fn last_touch_query<T: Real>(session: &SessionRecord<T>, success_item: u64) -> u32 {
    if let Some(purchase) = &session.purchase {
        if purchase.item_id == success_item {
            return purchase.query_id;
        }
    }
    let last_click = session
        .queries
        .iter()
        .rev()
        .find(|q| q.clicked_item_ids().any(|id| id == success_item));
    if let Some(q) = last_click {
        return q.query_id;
    }
    if let Some(&q) = session.queries_retrieving(success_item).last() {
        return q;
    }
    session.queries.last().expect("session has queries").query_id
}
