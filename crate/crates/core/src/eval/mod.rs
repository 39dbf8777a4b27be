//! Counterfactual evaluation of ranking policies on held-out logs.
//!
//! Instead of serving a candidate policy to fresh traffic, every logged
//! candidate set is re-ranked with the candidate and scored by how much
//! of the log's debiased success mass the new order concentrates in the
//! top slots. Three operations build on that primitive:
//!
//! - [`counterfactual_metric`] — one policy, one metric, one estimate
//!   with a bootstrap confidence interval;
//! - [`segment_lift`] — two policies compared overall and within each
//!   price-intent segment;
//! - [`alpha_sweep`] — a whole family of acquisition/engagement blends
//!   traced across metrics, the plot-ready replacement for an online
//!   sweep.
//!
//! Bootstrap resampling is always by session, not by query: context
//! weights are correlated within a session, so query-level resampling
//! would understate the interval width.

pub mod counterfactual;
pub mod segments;
pub mod sweep;

pub use counterfactual::{
    counterfactual_metric, ipw_expected_clicks, mean_clicks_per_query, LoggedOrder,
};
pub use segments::{segment_lift, segments_csv, SegmentLift};
pub use sweep::{alpha_sweep, default_alpha_grid, SweepCurve, SweepPoint};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::logs::context::TrainingContext;
use crate::num::Real;
use crate::policy::Policy;
use crate::reward::RewardKind;

/// The marketplace quantity a counterfactual estimate measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    ExpClicks,
    ExpPurchases,
    ExpRevenue,
}

impl Metric {
    /// The metric a reward spec's datasets estimate.
    pub fn of_kind(kind: RewardKind) -> Metric {
        match kind {
            RewardKind::Engagement => Metric::ExpClicks,
            RewardKind::Purchase => Metric::ExpPurchases,
            RewardKind::Revenue => Metric::ExpRevenue,
        }
    }

    /// Stable name used in CSV artifacts.
    pub fn name(&self) -> &'static str {
        match self {
            Metric::ExpClicks => "ExpClicks",
            Metric::ExpPurchases => "ExpPurchases",
            Metric::ExpRevenue => "ExpRevenue",
        }
    }
}

/// One counterfactual estimate with its bootstrap interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MetricEstimate<T: Real> {
    pub metric: Metric,
    pub value: T,
    /// Number of re-ranked query contexts behind the estimate.
    pub n_contexts: usize,
    pub ci_low: T,
    pub ci_high: T,
}

/// Anything that can order the items of a logged context, best first.
///
/// Returns indices into `context.items`. Implemented by [`Policy`] (score
/// and sort) and by [`LoggedOrder`] (replay the logging policy), so
/// evaluation code is agnostic about where rankings come from.
pub trait ContextRanker<T: Real> {
    fn order(&self, context: &TrainingContext<T>) -> Result<Vec<usize>>;
}

impl<T: Real> ContextRanker<T> for Policy<T> {
    fn order(&self, context: &TrainingContext<T>) -> Result<Vec<usize>> {
        self.rank_context(context)
    }
}
