//! Reward specifications: how logged sessions become weighted, debiased
//! learning signals.
//!
//! A [`RewardSpec`] picks (a) the marketplace outcome a session is scored
//! by — engagement, purchase count, or monetary value — (b) how that
//! outcome is attributed back to the session's queries, and (c) the
//! variance-reduction knobs applied on the way to per-query context
//! weights: weight clipping, self-normalization, value bucketing, and
//! ideal-reward normalization inside the per-query objective.
//!
//! The shipped presets mirror the three business framings the pipeline is
//! built around:
//!
//! | preset       | session value                     | attribution |
//! |--------------|-----------------------------------|-------------|
//! | `engagement` | 1 if the session has any click    | last touch  |
//! | `purchase`   | 1 if the session converted        | all touch   |
//! | `revenue`    | bucket revenue share / bucket size| all touch   |

pub mod attribution;
pub mod buckets;
pub mod discount;
pub mod markov;
pub mod propensity;
pub mod weights;

pub use attribution::{attribute, AttributionDistribution, AttributionScheme};
pub use buckets::{fit_value_buckets, ValueBuckets};
pub use discount::{per_query_expected_reward, rank_discount, RankDiscount};
pub use markov::MarkovModel;
pub use propensity::fit_propensity_curve;
pub use weights::{
    context_weight, debias_dataset, debias_labels, normalize_weights, session_value,
};

use serde::{Deserialize, Serialize};

use crate::num::Real;

/// The marketplace outcome a session contributes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    /// Sessions with at least one click count 1.
    Engagement,
    /// Converting sessions count 1.
    Purchase,
    /// Converting sessions carry their price bucket's revenue share,
    /// split evenly across the bucket's converting sessions.
    Revenue,
}

/// How a session outcome is credited to the session's queries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributionKind {
    /// All mass on the query where the success item was engaged.
    LastTouch,
    /// Uniform mass over every query that retrieved the success item.
    AllTouch,
    /// Mass proportional to removal effects under a first-order journey
    /// chain fitted on the log corpus.
    MarkovMultiTouch,
}

/// Where per-item labels come from when building datasets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    /// Binary engagement-derived labels from the logs themselves.
    Clicks,
    /// Teacher scores stored in `ItemRecord::soft_relevance`.
    Soft,
}

/// Full recipe for turning sessions into a weighted training signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RewardSpec<T: Real> {
    pub kind: RewardKind,
    pub attribution: AttributionKind,
    pub label_source: LabelSource,
    /// Per-context weight cap, applied before self-normalization.
    pub clipping_cap: Option<T>,
    /// Rescale the surviving context weights to sum to one.
    pub self_normalize: bool,
    /// Divide each per-query reward by its ideal-placement maximum.
    pub idcg_normalize: bool,
    /// Number of price buckets used by [`RewardKind::Revenue`].
    pub n_value_buckets: usize,
    /// Label for items clicked in a context whose success criterion is a
    /// purchase, marking them engaged-but-not-converted.
    pub partial_label: T,
    /// Cap on inverse-propensity label multipliers in [`debias_labels`].
    pub debias_cap: T,
}

impl<T: Real> RewardSpec<T> {
    /// Click-through objective: any-click sessions, last-touch credit.
    pub fn engagement() -> Self {
        RewardSpec {
            kind: RewardKind::Engagement,
            attribution: AttributionKind::LastTouch,
            label_source: LabelSource::Clicks,
            clipping_cap: Some(T::of(10.0)),
            self_normalize: true,
            idcg_normalize: true,
            n_value_buckets: 5,
            partial_label: T::of(0.2),
            debias_cap: T::of(10.0),
        }
    }

    /// Conversion objective: converting sessions, all-touch credit.
    pub fn purchase() -> Self {
        RewardSpec { kind: RewardKind::Purchase, attribution: AttributionKind::AllTouch, ..Self::engagement() }
    }

    /// Monetary objective: bucketed revenue shares, all-touch credit.
    pub fn revenue() -> Self {
        RewardSpec { kind: RewardKind::Revenue, attribution: AttributionKind::AllTouch, ..Self::engagement() }
    }

    /// Short identifier used in artifacts and mismatch errors.
    pub fn describe(&self) -> String {
        let kind = match self.kind {
            RewardKind::Engagement => "engagement",
            RewardKind::Purchase => "purchase",
            RewardKind::Revenue => "revenue",
        };
        let attribution = match self.attribution {
            AttributionKind::LastTouch => "last_touch",
            AttributionKind::AllTouch => "all_touch",
            AttributionKind::MarkovMultiTouch => "markov_multi_touch",
        };
        format!("{kind}/{attribution}")
    }

    /// Applies the clipping cap to a raw context weight.
    pub fn clip(&self, weight: T) -> T {
        match self.clipping_cap {
            Some(cap) => weight.min(cap),
            None => weight,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_differ_only_where_documented() {
        let e = RewardSpec::<f64>::engagement();
        let p = RewardSpec::<f64>::purchase();
        let r = RewardSpec::<f64>::revenue();
        assert_eq!(e.kind, RewardKind::Engagement);
        assert_eq!(e.attribution, AttributionKind::LastTouch);
        assert_eq!(p.kind, RewardKind::Purchase);
        assert_eq!(p.attribution, AttributionKind::AllTouch);
        assert_eq!(r.kind, RewardKind::Revenue);
        assert_eq!(r.attribution, AttributionKind::AllTouch);
        for spec in [&e, &p, &r] {
            assert_eq!(spec.clipping_cap, Some(10.0));
            assert!(spec.self_normalize);
            assert!(spec.idcg_normalize);
        }
    }

    #[test]
    fn describe_is_stable() {
        assert_eq!(RewardSpec::<f64>::engagement().describe(), "engagement/last_touch");
        assert_eq!(RewardSpec::<f64>::revenue().describe(), "revenue/all_touch");
    }

    #[test]
    fn clip_caps_only_above_the_cap() {
        let spec = RewardSpec::<f64>::engagement();
        assert_eq!(spec.clip(3.0), 3.0);
        assert_eq!(spec.clip(30.0), 10.0);
        let uncapped = RewardSpec::<f64> { clipping_cap: None, ..spec };
        assert_eq!(uncapped.clip(30.0), 30.0);
    }
}
