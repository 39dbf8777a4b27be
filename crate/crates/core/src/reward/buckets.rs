//! Monetary value bucketing.
//!
//! Raw revenue is a heavy-tailed per-session value; using it directly as
//! a weight lets a handful of expensive orders dominate the objective.
//! Instead, purchase prices are split into buckets at cumulative-revenue
//! quantiles, and a converting session is worth its bucket's share of
//! total revenue divided by the bucket's converting-session count. Every
//! bucket then carries equal aggregate weight, whatever its price level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logs::records::SessionRecord;
use crate::num::Real;

/// Fitted price buckets with their revenue shares.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ValueBuckets<T: Real> {
    /// Strictly ascending internal boundaries; bucket `i` holds prices in
    /// `[boundaries[i-1], boundaries[i])`, the last bucket is unbounded.
    pub boundaries: Vec<T>,
    /// Fraction of total observed revenue earned by each bucket.
    /// Sums to 1.
    pub revenue_share: Vec<T>,
    /// Converting sessions observed per bucket during fitting.
    pub converting_sessions: Vec<usize>,
}

impl<T: Real> ValueBuckets<T> {
    /// Number of buckets.
    pub fn len(&self) -> usize {
        self.revenue_share.len()
    }

    pub fn is_empty(&self) -> bool {
        self.revenue_share.is_empty()
    }

    /// Bucket index of a price: the number of boundaries at or below it.
    pub fn bucket_of(&self, price: T) -> usize {
        self.boundaries.partition_point(|&b| price >= b)
    }

    /// Per-session value of a conversion at `price`: the bucket's revenue
    /// share split evenly over its converting sessions. Prices falling in
    /// a bucket that saw no conversions during fitting are worth zero.
    pub fn session_share(&self, price: T) -> T {
        let idx = self.bucket_of(price);
        let count = self.converting_sessions[idx];
        if count == 0 {
            return T::zero();
        }
        self.revenue_share[idx] / T::of_usize(count)
    }
}

/// Fits `n_buckets` price buckets on the purchases found in `sessions`.
///
/// Boundaries sit at the prices where cumulative revenue (over purchases
/// sorted by price) first reaches each `1/n_buckets` quantile. Duplicate
/// boundary prices are merged, so a degenerate price distribution can
/// yield fewer buckets than requested. Needs at least `n_buckets`
/// purchases and a positive revenue total.
pub fn fit_value_buckets<T: Real>(
    sessions: &[SessionRecord<T>],
    n_buckets: usize,
) -> Result<ValueBuckets<T>> {
    if n_buckets == 0 {
        return Err(Error::Config("n_value_buckets must be >= 1".into()));
    }
    let mut prices: Vec<f64> =
        sessions.iter().filter_map(|s| s.purchase.as_ref()).map(|p| p.price.widen()).collect();
    if prices.len() < n_buckets {
        return Err(Error::InsufficientPurchases { needed: n_buckets, found: prices.len() });
    }
    prices.sort_by(|a, b| a.partial_cmp(b).expect("purchase prices must be finite"));
    let total: f64 = prices.iter().sum();
    if total <= 0.0 {
        return Err(Error::Config("total purchase revenue is zero".into()));
    }

    let mut boundaries: Vec<f64> = Vec::new();
    let mut cut = 1;
    let mut cumulative = 0.0;
    for &price in &prices {
        cumulative += price;
        while cut < n_buckets && cumulative >= total * cut as f64 / n_buckets as f64 {
            if boundaries.last() != Some(&price) {
                boundaries.push(price);
            }
            cut += 1;
        }
    }

    let fitted = ValueBuckets {
        boundaries: boundaries.iter().map(|&b| T::of(b)).collect(),
        revenue_share: vec![T::zero(); boundaries.len() + 1],
        converting_sessions: vec![0; boundaries.len() + 1],
    };
    let mut revenue = vec![0.0f64; boundaries.len() + 1];
    let mut counts = vec![0usize; boundaries.len() + 1];
    for &price in &prices {
        let idx = fitted.bucket_of(T::of(price));
        revenue[idx] += price;
        counts[idx] += 1;
    }
    Ok(ValueBuckets {
        revenue_share: revenue.iter().map(|&r| T::of(r / total)).collect(),
        converting_sessions: counts,
        ..fitted
    })
}
