//! Rank discounts and per-query expected reward.
//!
//! A discount curve maps a 1-based display rank to the weight that rank
//! contributes to a page's expected reward. Two curves are supported: the
//! standard logarithmic DCG discount `1 / log2(1 + rank)`, and a fitted
//! power-law examination curve `rank^-exponent` recovered from logged
//! click-through rates (see [`crate::reward::propensity`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Logarithmic DCG discount at a 1-based rank: `1 / log2(1 + rank)`.
///
/// `rank_discount(1) == 1`, and the curve is strictly decreasing.
pub fn rank_discount<T: Real>(rank: usize) -> Result<T> {
    if rank < 1 {
        return Err(Error::InvalidRank(rank));
    }
    Ok(T::one() / T::of_usize(1 + rank).log2())
}

/// A discount curve over display ranks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound = "")]
pub enum RankDiscount<T: Real> {
    /// `1 / log2(1 + rank)`.
    Log,
    /// `rank^-exponent`, optionally tabulated for the ranks observed
    /// during fitting. Ranks beyond the table fall back to the power law.
    Fitted {
        exponent: T,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        curve: Option<Vec<T>>,
    },
}

impl<T: Real> RankDiscount<T> {
    /// Discount at a 1-based rank.
    pub fn at(&self, rank: usize) -> Result<T> {
        match self {
            RankDiscount::Log => rank_discount(rank),
            RankDiscount::Fitted { exponent, curve } => {
                if rank < 1 {
                    return Err(Error::InvalidRank(rank));
                }
                if let Some(table) = curve {
                    if let Some(&v) = table.get(rank - 1) {
                        return Ok(v);
                    }
                }
                Ok(T::of_usize(rank).powf(-*exponent))
            }
        }
    }
}

/// Expected reward of showing `relevance`-valued items in a given order.
///
/// `ranking[slot]` is the index into `relevance` of the item placed at
/// `slot` (so rank `slot + 1`). The reward is the discount-weighted sum of
/// the placed items' relevance values. With `idcg_normalize` the sum is
/// divided by its maximum over all placements of the same item set — the
/// best achievable puts items in decreasing relevance order — yielding a
/// value in `[0, 1]`. An all-zero relevance vector normalizes to `0`.
pub fn per_query_expected_reward<T: Real>(
    ranking: &[usize],
    relevance: &[T],
    discount: &RankDiscount<T>,
    idcg_normalize: bool,
) -> Result<T> {
    if ranking.is_empty() {
        return Err(Error::EmptyRanking);
    }
    let mut dcg = T::zero();
    for (slot, &idx) in ranking.iter().enumerate() {
        let rel = *relevance.get(idx).ok_or_else(|| {
            Error::Config(format!(
                "ranking refers to item {idx} but only {} relevance values were given",
                relevance.len()
            ))
        })?;
        dcg += discount.at(slot + 1)? * rel;
    }
    if !idcg_normalize {
        return Ok(dcg);
    }
    let ideal = ideal_reward(ranking.len(), relevance, discount)?;
    if ideal <= T::zero() {
        return Ok(T::zero());
    }
    Ok(dcg / ideal)
}

/// Maximum discount-weighted sum achievable by placing the `n_slots` most
/// relevant items in decreasing order.
pub(crate) fn ideal_reward<T: Real>(
    n_slots: usize,
    relevance: &[T],
    discount: &RankDiscount<T>,
) -> Result<T> {
    let mut sorted: Vec<T> = relevance.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut ideal = T::zero();
    for (slot, &rel) in sorted.iter().take(n_slots).enumerate() {
        ideal += discount.at(slot + 1)? * rel;
    }
    Ok(ideal)
}
