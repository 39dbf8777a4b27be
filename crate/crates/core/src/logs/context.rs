//! Per-query learning contexts and datasets.
//!
//! A [`TrainingContext`] is one query's worth of supervised signal: the
//! items a scorer must order, their labels, where the logging policy
//! showed them, and the context's weight in the overall objective. A
//! [`Dataset`] bundles contexts with the reward spec they were built
//! under, so downstream consumers can refuse mismatched inputs instead of
//! silently mixing objectives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::reward::RewardSpec;

/// One item inside a training or evaluation context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ContextItem<T: Real> {
    pub item_id: u64,
    pub features: Vec<T>,
    /// Learning target in `[0, max(1, debias cap)]`; raw labels live in
    /// `[0, 1]` and inverse-propensity debiasing can push clicked labels
    /// above 1.
    pub label: T,
    /// 1-based rank the logging policy displayed the item at, absent for
    /// retrieved-but-unshown items.
    pub logged_rank: Option<usize>,
    /// Whether the label stems from a click on this query. Debiasing
    /// applies only to clicked labels.
    pub clicked: bool,
}

/// One query's candidates, labels, and weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrainingContext<T: Real> {
    pub session_id: u64,
    pub query_id: u32,
    pub items: Vec<ContextItem<T>>,
    /// Attributed, value-scaled, clipped (and possibly normalized) weight
    /// of this context in the training objective.
    pub context_weight: T,
    /// Price-intent segment of the originating session, for stratified
    /// evaluation.
    pub segment: usize,
    /// Query-level features, shared by every item in the context.
    pub context_features: Vec<T>,
}

/// Contexts plus the reward spec that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Dataset<T: Real> {
    pub spec: RewardSpec<T>,
    pub contexts: Vec<TrainingContext<T>>,
}

impl<T: Real> Dataset<T> {
    /// Errors unless the dataset was built under `expected`.
    pub fn check_spec(&self, expected: &RewardSpec<T>) -> Result<()> {
        if self.spec.kind != expected.kind || self.spec.attribution != expected.attribution {
            return Err(Error::SpecMismatch {
                dataset: self.spec.describe(),
                requested: expected.describe(),
            });
        }
        Ok(())
    }

    /// Item feature dimension, from the first item found.
    pub fn item_dim(&self) -> Option<usize> {
        self.contexts.iter().find_map(|c| c.items.first()).map(|i| i.features.len())
    }

    /// Context feature dimension, from the first context.
    pub fn context_dim(&self) -> Option<usize> {
        self.contexts.first().map(|c| c.context_features.len())
    }
}
