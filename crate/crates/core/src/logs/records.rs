//! Session-log schema.
//!
//! A session is what the logging system would emit for one user visit: a
//! sequence of queries, each with its retrieved candidates, the ranking
//! that was shown, which slots were clicked, and at most one purchase.
//! Only observable quantities appear here — latent user state stays
//! inside the simulator, except for the optional oracle relevance
//! labels used to study distillation-style training.

use serde::{Deserialize, Serialize};

use crate::num::Real;

/// One candidate item as logged for a query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ItemRecord<T: Real> {
    pub item_id: u64,
    /// Observable item features (noisy quality signals plus price encodings).
    pub features: Vec<T>,
    pub price: T,
    /// Whether the item was placed in an examined slot range of the page.
    /// Retrieved-but-unshown candidates carry `false`.
    pub impressed: bool,
    /// Optional graded relevance in `[0, 1]` from a teacher model or an
    /// oracle-labelling run of the traffic generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soft_relevance: Option<T>,
}

/// One query (SERP) within a session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct QueryRecord<T: Real> {
    /// Position of the query within its session, starting at 0.
    pub query_id: u32,
    /// Everything retrieval returned, shown or not.
    pub candidates: Vec<ItemRecord<T>>,
    /// Item ids in display order. Every entry was impressed; candidates
    /// ranked below the page fold are absent.
    pub ranking: Vec<u64>,
    /// Clicked slots as 0-based indices into `ranking`.
    pub clicks: Vec<usize>,
    /// Query-level features available to a scorer at serving time
    /// (position in session, engagement so far, declared price segment).
    pub context_features: Vec<T>,
}

/// A purchase closing a session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PurchaseRecord<T: Real> {
    pub item_id: u64,
    pub price: T,
    /// The query on which the purchased item was clicked.
    pub query_id: u32,
}

/// One logged user session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SessionRecord<T: Real> {
    pub session_id: u64,
    /// Price-intent segment the traffic generator assigned to this user.
    /// Logged for stratified reporting, never fed to scorers as a label.
    pub intent_bucket: usize,
    pub queries: Vec<QueryRecord<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purchase: Option<PurchaseRecord<T>>,
}

impl<T: Real> QueryRecord<T> {
    /// Looks up a candidate record by item id.
    pub fn candidate(&self, item_id: u64) -> Option<&ItemRecord<T>> {
        self.candidates.iter().find(|c| c.item_id == item_id)
    }

    /// Item ids clicked on this query, in slot order.
    pub fn clicked_item_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.clicks.iter().filter_map(|&slot| self.ranking.get(slot).copied())
    }

    /// 1-based displayed rank of an item, if it was impressed.
    pub fn logged_rank(&self, item_id: u64) -> Option<usize> {
        self.ranking.iter().position(|&id| id == item_id).map(|slot| slot + 1)
    }
}

impl<T: Real> SessionRecord<T> {
    /// Whether any query in the session received a click.
    pub fn has_click(&self) -> bool {
        self.queries.iter().any(|q| !q.clicks.is_empty())
    }

    /// Total number of clicks across the session.
    pub fn click_count(&self) -> usize {
        self.queries.iter().map(|q| q.clicks.len()).sum()
    }

    /// The item clicked last in the session, with the query it was
    /// clicked on. Within one query the last click is the deepest slot.
    pub fn last_clicked(&self) -> Option<(u32, u64)> {
        self.queries.iter().rev().find_map(|q| {
            let slot = q.clicks.iter().max()?;
            Some((q.query_id, *q.ranking.get(*slot)?))
        })
    }

    /// Queries on which `item_id` came back as a retrieval candidate.
    pub fn queries_retrieving(&self, item_id: u64) -> Vec<u32> {
        self.queries
            .iter()
            .filter(|q| q.candidates.iter().any(|c| c.item_id == item_id))
            .map(|q| q.query_id)
            .collect()
    }

    /// The record of `item_id` from the first query that retrieved it.
    pub fn any_candidate_record(&self, item_id: u64) -> Option<&ItemRecord<T>> {
        self.queries.iter().find_map(|q| q.candidate(item_id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(id: u64) -> ItemRecord<f64> {
        ItemRecord { item_id: id, features: vec![0.0], price: 10.0, impressed: true, soft_relevance: None }
    }

    fn query(query_id: u32, ids: &[u64], clicks: &[usize]) -> QueryRecord<f64> {
        QueryRecord {
            query_id,
            candidates: ids.iter().map(|&id| item(id)).collect(),
            ranking: ids.to_vec(),
            clicks: clicks.to_vec(),
            context_features: vec![],
        }
    }

    #[test]
    fn last_clicked_prefers_later_queries_then_deeper_slots() {
        let session = SessionRecord {
            session_id: 0,
            intent_bucket: 0,
            queries: vec![query(0, &[1, 2, 3], &[0, 2]), query(1, &[4, 5], &[]), query(2, &[6, 7], &[1, 0])],
            purchase: None,
        };
        assert_eq!(session.last_clicked(), Some((2, 7)));
    }

    #[test]
    fn last_clicked_is_none_without_clicks() {
        let session = SessionRecord::<f64> {
            session_id: 0,
            intent_bucket: 0,
            queries: vec![query(0, &[1, 2], &[])],
            purchase: None,
        };
        assert_eq!(session.last_clicked(), None);
        assert!(!session.has_click());
    }

    #[test]
    fn logged_rank_is_one_based_and_absent_for_unshown_items() {
        let q = query(0, &[10, 20, 30], &[]);
        assert_eq!(q.logged_rank(10), Some(1));
        assert_eq!(q.logged_rank(30), Some(3));
        assert_eq!(q.logged_rank(99), None);
    }

    #[test]
    fn queries_retrieving_scans_candidates_not_rankings() {
        let mut q0 = query(0, &[1, 2], &[]);
        q0.candidates.push(ItemRecord { impressed: false, ..item(9) });
        let session = SessionRecord {
            session_id: 0,
            intent_bucket: 1,
            queries: vec![q0, query(1, &[3], &[])],
            purchase: None,
        };
        assert_eq!(session.queries_retrieving(9), vec![0]);
        assert_eq!(session.queries_retrieving(3), vec![1]);
        assert!(session.queries_retrieving(42).is_empty());
    }
}
