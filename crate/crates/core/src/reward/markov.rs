//! First-order journey chain for removal-effect attribution.
//!
//! Each query in a session is summarized into one of six transient states
//! — engaged or not, crossed with the query's position tercile within its
//! session — and every session is a walk through those states ending in
//! one of two absorbing states, `Conversion` or `Null`. The chain is
//! fitted by transition counting over a log corpus. The removal effect of
//! a state is how much the chain's conversion probability drops when that
//! state is knocked out (all flow into it is diverted to `Null`); it
//! measures how much of the path to conversion runs through that kind of
//! query.

use serde::{Deserialize, Serialize};

use crate::logs::records::{QueryRecord, SessionRecord};
use crate::num::Real;

/// Number of transient states: engaged x position tercile.
pub const N_STATES: usize = 6;
const CONVERSION: usize = N_STATES;
const NULL: usize = N_STATES + 1;

/// Transient-state index of a query: `engaged * 3 + tercile`.
pub fn query_state<T: Real>(query: &QueryRecord<T>, session_len: usize) -> usize {
    let engaged = usize::from(!query.clicks.is_empty());
    let tercile = if session_len <= 1 {
        0
    } else {
        ((query.query_id as usize * 3) / session_len).min(2)
    };
    engaged * 3 + tercile
}

/// Fitted first-order chain over query states.
///
/// Rows hold outgoing probabilities for each transient state over the
/// eight targets (six transient, then conversion, then null). States that
/// never occurred in the corpus absorb into null.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovModel {
    pub start: [f64; N_STATES],
    pub transitions: [[f64; N_STATES + 2]; N_STATES],
}

impl MarkovModel {
    /// Counts transitions over a corpus. Sessions without queries are
    /// skipped; the final query of a session transitions into
    /// `Conversion` when the session purchased, `Null` otherwise.
    pub fn fit<T: Real>(sessions: &[SessionRecord<T>]) -> MarkovModel {
        let mut start = [0.0; N_STATES];
        let mut counts = [[0.0; N_STATES + 2]; N_STATES];
        let mut n_sessions = 0.0;
        for session in sessions {
            let len = session.queries.len();
            if len == 0 {
                continue;
            }
            n_sessions += 1.0;
            let states: Vec<usize> =
                session.queries.iter().map(|q| query_state(q, len)).collect();
            start[states[0]] += 1.0;
            for pair in states.windows(2) {
                counts[pair[0]][pair[1]] += 1.0;
            }
            let end = if session.purchase.is_some() { CONVERSION } else { NULL };
            counts[states[len - 1]][end] += 1.0;
        }

        let mut transitions = [[0.0; N_STATES + 2]; N_STATES];
        for (row, count_row) in transitions.iter_mut().zip(&counts) {
            let total: f64 = count_row.iter().sum();
            if total > 0.0 {
                for (p, &c) in row.iter_mut().zip(count_row) {
                    *p = c / total;
                }
            } else {
                row[NULL] = 1.0;
            }
        }
        if n_sessions > 0.0 {
            for s in &mut start {
                *s /= n_sessions;
            }
        }
        MarkovModel { start, transitions }
    }

    /// Probability of absorbing into `Conversion`, optionally with one
    /// transient state knocked out (its inflow diverted to `Null`).
    ///
    /// Solves the absorption system `(I - Q) a = r` for the per-state
    /// conversion probabilities `a`, where `Q` is the transient-to-
    /// transient block and `r` the direct-to-conversion column, then
    /// averages over the start distribution.
    pub fn conversion_rate(&self, removed: Option<usize>) -> f64 {
        let keep = |s: usize| removed != Some(s);
        let mut system = [[0.0f64; N_STATES + 1]; N_STATES];
        for s in 0..N_STATES {
            system[s][s] = 1.0;
            if !keep(s) {
                continue;
            }
            for t in 0..N_STATES {
                if keep(t) {
                    system[s][t] -= self.transitions[s][t];
                }
            }
            system[s][N_STATES] = self.transitions[s][CONVERSION];
        }
        let absorb = solve(system);
        (0..N_STATES).filter(|&s| keep(s)).map(|s| self.start[s] * absorb[s]).sum()
    }

    /// Drop in conversion probability when `state` is removed, floored at
    /// zero (sampling noise can push tiny effects negative).
    pub fn removal_effect(&self, state: usize) -> f64 {
        (self.conversion_rate(None) - self.conversion_rate(Some(state))).max(0.0)
    }
}

/// Gaussian elimination with partial pivoting on the augmented system.
fn solve(mut m: [[f64; N_STATES + 1]; N_STATES]) -> [f64; N_STATES] {
    for col in 0..N_STATES {
        let pivot = (col..N_STATES)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
            .unwrap();
        m.swap(col, pivot);
        // Diagonal dominance of I - Q keeps pivots well away from zero.
        let p = m[col][col];
        for row in 0..N_STATES {
            if row == col {
                continue;
            }
            let factor = m[row][col] / p;
            for k in col..=N_STATES {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    let mut x = [0.0; N_STATES];
    for (i, xi) in x.iter_mut().enumerate() {
        *xi = m[i][N_STATES] / m[i][i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logs::records::{ItemRecord, PurchaseRecord};
    use approx::assert_relative_eq;

    fn query(query_id: u32, clicked: bool) -> QueryRecord<f64> {
        QueryRecord {
            query_id,
            candidates: vec![ItemRecord {
                item_id: 1,
                features: vec![],
                price: 1.0,
                impressed: true,
                soft_relevance: None,
            }],
            ranking: vec![1],
            clicks: if clicked { vec![0] } else { vec![] },
            context_features: vec![],
        }
    }

    fn session(id: u64, clicked: &[bool], converts: bool) -> SessionRecord<f64> {
        SessionRecord {
            session_id: id,
            intent_bucket: 0,
            queries: clicked.iter().enumerate().map(|(i, &c)| query(i as u32, c)).collect(),
            purchase: converts.then(|| PurchaseRecord {
                item_id: 1,
                price: 10.0,
                query_id: clicked.len() as u32 - 1,
            }),
        }
    }

    #[test]
    fn terciles_split_session_positions() {
        let s = session(0, &[false, true, false], false);
        let states: Vec<usize> = s.queries.iter().map(|q| query_state(q, 3)).collect();
        // Unengaged-early, engaged-middle, unengaged-late.
        assert_eq!(states, vec![0, 4, 2]);
        assert_eq!(query_state(&query(0, true), 1), 3);
    }

    #[test]
    fn single_state_corpus_has_closed_form_conversion() {
        // Every session is one engaged-early query; 30 of 60 convert, so
        // the chain is a single transient state splitting 50/50 between
        // the absorbing states.
        let sessions: Vec<_> =
            (0..60).map(|i| session(i, &[true], i % 2 == 0)).collect();
        let model = MarkovModel::fit(&sessions);
        assert_relative_eq!(model.conversion_rate(None), 0.5, max_relative = 1e-12);
        assert_relative_eq!(model.removal_effect(3), 0.5, max_relative = 1e-12);
        for state in [0, 1, 2, 4, 5] {
            assert_eq!(model.removal_effect(state), 0.0);
        }
    }

    #[test]
    fn two_step_chain_matches_hand_solution() {
        // Two session shapes: [engaged] -> converts (prob 1), and
        // [unengaged, engaged] where the second step converts. Starts are
        // half state 3 (engaged, first tercile) and half state 0; the
        // two-query shape walks 0 -> 4 (engaged, middle tercile).
        // Hand absorption: a(3) = 1, a(0) = P(0 -> 4) * a(4) with
        // a(4) = 1, so conversion = 0.5 * 1 + 0.5 * 1 = 1. Removing the
        // engaged-middle state 4 kills the second path: conversion drops
        // to 0.5.
        let mut sessions: Vec<_> = (0..10).map(|i| session(i, &[true], true)).collect();
        sessions.extend((10..20).map(|i| session(i, &[false, true], true)));
        let model = MarkovModel::fit(&sessions);
        assert_relative_eq!(model.conversion_rate(None), 1.0, max_relative = 1e-12);
        assert_relative_eq!(model.conversion_rate(Some(4)), 0.5, max_relative = 1e-12);
        assert_relative_eq!(model.removal_effect(4), 0.5, max_relative = 1e-12);
        // Removing the unengaged-early state only cuts its own starts.
        assert_relative_eq!(model.conversion_rate(Some(0)), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn removal_never_increases_conversion() {
        let shapes: [(&[bool], bool); 6] = [
            (&[true], true),
            (&[false], false),
            (&[false, true], true),
            (&[true, false, false], false),
            (&[false, false, true], true),
            (&[true, true], false),
        ];
        let sessions: Vec<_> = shapes
            .iter()
            .enumerate()
            .map(|(i, (clicks, converts))| session(i as u64, clicks, *converts))
            .collect();
        let model = MarkovModel::fit(&sessions);
        let base = model.conversion_rate(None);
        for state in 0..N_STATES {
            let without = model.conversion_rate(Some(state));
            assert!(without <= base + 1e-12);
            assert!(without >= -1e-12);
        }
    }
}
