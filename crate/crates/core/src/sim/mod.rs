//! Synthetic e-commerce marketplace.
//!
//! The simulator produces the observational logs every other module
//! consumes: a price-tiered catalog, shoppers with latent taste and
//! price intent, a position-biased click model, and purchase decisions
//! that depend on how well a shown item matches the latent intent.
//! Because the latent state is known here, the simulator doubles as
//! ground truth for counterfactual evaluation and for online A/B
//! comparisons between ranking policies.

mod abtest;
mod catalog;
mod click;
mod intent;
mod session;
mod truth;

pub use abtest::{run_ab_test, AbReport, MetricLift, SessionStats};
pub use catalog::{sample_catalog, Item, ItemCatalog, FEATURE_DIM, QUALITY_DIM};
pub use click::{simulate_page, ClickModelParams, PageOutcome};
pub use intent::{sample_intent, UserIntent};
pub use session::{
    context_dim, simulate_batch, simulate_serp, simulate_session, RankingPolicy,
};
pub use truth::{ground_truth, BucketArchetype, GroundTruth, ItemRelevance};

use serde::{Deserialize, Serialize};

use crate::num::Real;
use crate::{Error, Result};

/// Every knob of the synthetic marketplace.
///
/// The defaults are calibrated so that purchase-trained rankers trade
/// clicks for revenue against engagement-trained ones at moderate
/// sample sizes; see [`SimConfig::default`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(bound = "", deny_unknown_fields, default)]
pub struct SimConfig<T: Real> {
    /// Catalog size.
    pub n_items: usize,
    /// Number of price tiers; also the number of shopper segments.
    pub n_buckets: usize,
    /// Cheapest possible list price.
    pub price_min: T,
    /// Most expensive possible list price.
    pub price_max: T,
    /// How strongly quality scales with the price tier of an item.
    pub premium_gain: T,
    /// Spread of the budget/premium style coordinates around their tier.
    pub style_noise: T,
    /// Spread of the idiosyncratic taste coordinates.
    pub taste_scale: T,
    /// Observation noise added to quality when emitting item features.
    pub feature_noise: T,
    /// Shopper mix over price-intent buckets; must sum to one.
    pub segment_mix: Vec<T>,
    /// Spread of a shopper's style coordinates around their bucket.
    pub intent_style_noise: T,
    /// Spread of a shopper's taste coordinates.
    pub intent_taste_scale: T,
    /// Poisson rate offset for queries beyond the first.
    pub depth_base: T,
    /// Extra browsing per unit of premium tendency.
    pub depth_gain: T,
    /// Hard cap on queries per session.
    pub max_queries: usize,
    /// Purchase-resolve probability for the most budget-minded shopper.
    pub resolve_base: T,
    /// How much purchase resolve drops for premium shoppers.
    pub resolve_slope: T,
    /// Log-price shift above the budget target at which the most
    /// premium-leaning shopper browses. Clicks land near the shifted
    /// price, purchases stay anchored at the target, so the two
    /// outcomes favour genuinely different rankings.
    pub aspiration_gain: T,
    /// Candidates returned by retrieval for each query.
    pub retrieval_k: usize,
    /// Noise on the retrieval affinity score.
    pub retrieval_noise: T,
    /// Price-mismatch penalty inside retrieval.
    pub retrieval_price_damping: T,
    /// Result-page length; only these ranks are ever examined.
    pub n_slots: usize,
    /// When set, logs the true click probability of every candidate as
    /// its `soft_relevance`, emulating an offline teacher annotator.
    pub log_soft_relevance: bool,
    /// Examination and click behaviour.
    pub click: ClickModelParams<T>,
}

impl<T: Real> Default for SimConfig<T> {
    fn default() -> Self {
        SimConfig {
            n_items: 1000,
            n_buckets: 5,
            price_min: T::of(1.0),
            price_max: T::of(1000.0),
            premium_gain: T::of(0.15),
            style_noise: T::of(0.25),
            taste_scale: T::of(0.5),
            feature_noise: T::of(0.25),
            segment_mix: [0.30, 0.25, 0.20, 0.15, 0.10].iter().map(|&p| T::of(p)).collect(),
            intent_style_noise: T::of(0.2),
            intent_taste_scale: T::of(0.45),
            depth_base: T::of(0.5),
            depth_gain: T::of(2.5),
            max_queries: 8,
            resolve_base: T::of(0.65),
            resolve_slope: T::of(0.45),
            aspiration_gain: T::of(0.6),
            retrieval_k: 25,
            retrieval_noise: T::of(0.6),
            retrieval_price_damping: T::of(0.3),
            n_slots: 10,
            log_soft_relevance: false,
            click: ClickModelParams::default(),
        }
    }
}

impl<T: Real> SimConfig<T> {
    /// Rejects configurations that cannot produce a well-formed market.
    pub fn validate(&self) -> Result<()> {
        if self.n_buckets == 0 {
            return Err(Error::Config("n_buckets must be at least 1".into()));
        }
        if self.n_items < self.n_buckets {
            return Err(Error::Config(format!(
                "n_items ({}) must be at least n_buckets ({}) so every price tier is stocked",
                self.n_items, self.n_buckets
            )));
        }
        if !(self.price_min > T::zero() && self.price_max > self.price_min) {
            return Err(Error::Config(
                "prices must satisfy 0 < price_min < price_max".into(),
            ));
        }
        if self.segment_mix.len() != self.n_buckets {
            return Err(Error::Config(format!(
                "segment_mix has {} entries but n_buckets is {}",
                self.segment_mix.len(),
                self.n_buckets
            )));
        }
        let total: f64 = self.segment_mix.iter().map(|p| p.widen()).sum();
        if self.segment_mix.iter().any(|p| *p < T::zero()) || (total - 1.0).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "segment_mix must be non-negative and sum to 1 (got {total})"
            )));
        }
        if self.max_queries == 0 {
            return Err(Error::Config("max_queries must be at least 1".into()));
        }
        if self.retrieval_k < 2 {
            return Err(Error::Config("retrieval_k must be at least 2".into()));
        }
        if self.n_slots == 0 {
            return Err(Error::Config("n_slots must be at least 1".into()));
        }
        for (name, value) in [
            ("style_noise", self.style_noise),
            ("taste_scale", self.taste_scale),
            ("feature_noise", self.feature_noise),
            ("intent_style_noise", self.intent_style_noise),
            ("intent_taste_scale", self.intent_taste_scale),
            ("depth_base", self.depth_base),
            ("depth_gain", self.depth_gain),
            ("retrieval_noise", self.retrieval_noise),
            ("retrieval_price_damping", self.retrieval_price_damping),
            ("premium_gain", self.premium_gain),
            ("aspiration_gain", self.aspiration_gain),
        ] {
            if !(value >= T::zero()) || !value.is_finite() {
                return Err(Error::Config(format!("{name} must be finite and >= 0")));
            }
        }
        self.click.validate()?;
        Ok(())
    }

    /// Number of result-page slots, as the scalar type.
    pub(crate) fn premium_tendency(&self, bucket: usize) -> T {
        if self.n_buckets <= 1 {
            T::zero()
        } else {
            T::of_usize(bucket) / T::of_usize(self.n_buckets - 1)
        }
    }

    /// Log-spaced price band `[low, high)` of one bucket.
    pub(crate) fn bucket_band(&self, bucket: usize) -> (T, T) {
        let ln_min = self.price_min.widen().ln();
        let ln_max = self.price_max.widen().ln();
        let step = (ln_max - ln_min) / self.n_buckets as f64;
        let low = (ln_min + step * bucket as f64).exp();
        let high = (ln_min + step * (bucket + 1) as f64).exp();
        (T::of(low), T::of(high))
    }
}
