//! Ranking policies: scoring functions, training, and mixing.

pub mod hybrid;
pub mod lambda;
pub mod scorer;
pub mod train;

pub use hybrid::{mix, HybridScorer};
pub use lambda::{lambda_gradient, pair_deltas, PairDelta};
pub use scorer::{rank_by_scores, LinearScorer, MlpScorer, ScoringFunction};
pub use train::{train, train_pointwise, DeltaRefresh, TrainConfig, TrainOutcome};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logs::context::TrainingContext;
use crate::num::Real;

/// The scoring rule a policy ranks by.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
#[serde(bound = "")]
pub enum PolicyScorer<T: Real> {
    Single(ScoringFunction<T>),
    Hybrid(HybridScorer<T>),
}

/// A deterministic ranking policy: score every candidate, sort
/// descending, break ties by ascending item id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Policy<T: Real> {
    pub scorer: PolicyScorer<T>,
}

impl<T: Real> Policy<T> {
    pub fn single(scorer: ScoringFunction<T>) -> Self {
        Policy { scorer: PolicyScorer::Single(scorer) }
    }

    /// Scores one item in its context.
    pub fn score(&self, item: &[T], context: &[T]) -> Result<T> {
        match &self.scorer {
            PolicyScorer::Single(f) => f.score(item, context),
            PolicyScorer::Hybrid(h) => h.score(item, context),
        }
    }

    /// Ranks `(item_id, features)` candidates within a context, returning
    /// candidate indices in display order.
    pub fn rank(&self, candidates: &[(u64, &[T])], context: &[T]) -> Result<Vec<usize>> {
        if candidates.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        let scores: Vec<T> = candidates
            .iter()
            .map(|(_, features)| self.score(features, context))
            .collect::<Result<_>>()?;
        let ids: Vec<u64> = candidates.iter().map(|&(id, _)| id).collect();
        Ok(rank_by_scores(&scores, &ids))
    }

    /// Ranks the items of a training/evaluation context.
    pub fn rank_context(&self, context: &TrainingContext<T>) -> Result<Vec<usize>> {
        let candidates: Vec<(u64, &[T])> =
            context.items.iter().map(|i| (i.item_id, i.features.as_slice())).collect();
        self.rank(&candidates, &context.context_features)
    }
}
