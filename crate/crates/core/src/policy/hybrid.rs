//! Score-space mixing of two trained scorers.
//!
//! A hybrid policy trades off an acquisition objective (purchases or
//! revenue) against an engagement objective by ranking on the convex
//! combination `(1 - alpha) * z_P + alpha * z_C` of the two scorers'
//! standardized scores. Standardization constants are frozen at mix time
//! from a calibration dataset, so the blend is a fixed scoring function,
//! not something recomputed per query. Because ranking is invariant to
//! positive affine maps, `alpha = 0` reproduces the acquisition scorer's
//! rankings exactly and `alpha = 1` the engagement scorer's.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logs::context::Dataset;
use crate::num::Real;
use crate::policy::scorer::ScoringFunction;
use crate::policy::{Policy, PolicyScorer};

/// A frozen convex combination of two standardized scorers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct HybridScorer<T: Real> {
    pub acquisition: ScoringFunction<T>,
    pub engagement: ScoringFunction<T>,
    /// Weight on the engagement side, in `[0, 1]`.
    pub alpha: T,
    pub acquisition_mean: T,
    pub acquisition_scale: T,
    pub engagement_mean: T,
    pub engagement_scale: T,
}

impl<T: Real> HybridScorer<T> {
    pub fn score(&self, item: &[T], context: &[T]) -> Result<T> {
        let z_acq =
            (self.acquisition.score(item, context)? - self.acquisition_mean) / self.acquisition_scale;
        let z_eng =
            (self.engagement.score(item, context)? - self.engagement_mean) / self.engagement_scale;
        Ok((T::one() - self.alpha) * z_acq + self.alpha * z_eng)
    }
}

/// Mean and population standard deviation of a scorer over every
/// (item, context) pair in the calibration set.
fn score_moments<T: Real>(
    scorer: &ScoringFunction<T>,
    calibration: &Dataset<T>,
    component: &'static str,
) -> Result<(T, T)> {
    let mut sum = T::zero();
    let mut sum_sq = T::zero();
    let mut n = 0usize;
    for ctx in &calibration.contexts {
        for item in &ctx.items {
            let s = scorer.score(&item.features, &ctx.context_features)?;
            sum += s;
            sum_sq += s * s;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mean = sum / T::of_usize(n);
    let variance = (sum_sq / T::of_usize(n) - mean * mean).max(T::zero());
    let scale = variance.sqrt();
    if scale <= T::of(1e-12) {
        return Err(Error::DegenerateScores { component });
    }
    Ok((mean, scale))
}

/// Builds the hybrid policy `rank by (1 - alpha) * z_acq + alpha * z_eng`
/// with standardization constants frozen from `calibration`.
///
/// Fails when `alpha` is outside `[0, 1]`, when the calibration set is
/// empty, or when either scorer is constant over it (standardization
/// would divide by zero).
pub fn mix<T: Real>(
    acquisition: ScoringFunction<T>,
    engagement: ScoringFunction<T>,
    alpha: T,
    calibration: &Dataset<T>,
) -> Result<Policy<T>> {
    if !(T::zero()..=T::one()).contains(&alpha) {
        return Err(Error::Config(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let (acquisition_mean, acquisition_scale) =
        score_moments(&acquisition, calibration, "acquisition")?;
    let (engagement_mean, engagement_scale) =
        score_moments(&engagement, calibration, "engagement")?;
    Ok(Policy {
        scorer: PolicyScorer::Hybrid(HybridScorer {
            acquisition,
            engagement,
            alpha,
            acquisition_mean,
            acquisition_scale,
            engagement_mean,
            engagement_scale,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logs::context::{ContextItem, TrainingContext};
    use crate::policy::scorer::LinearScorer;
    use crate::reward::RewardSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn calibration(seed: u64, n: usize) -> Dataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let contexts = (0..n)
            .map(|i| TrainingContext {
                session_id: i as u64,
                query_id: 0,
                items: (0..4)
                    .map(|j| ContextItem {
                        item_id: j,
                        features: vec![rng.random::<f64>(), rng.random::<f64>()],
                        label: 0.0,
                        logged_rank: Some(j as usize + 1),
                        clicked: false,
                    })
                    .collect(),
                context_weight: 1.0 / n as f64,
                segment: 0,
                context_features: vec![rng.random::<f64>()],
            })
            .collect();
        Dataset { spec: RewardSpec::purchase(), contexts }
    }

    fn scorer(weights: Vec<f64>, bias: f64) -> ScoringFunction<f64> {
        ScoringFunction::Linear(LinearScorer { weights, bias })
    }

    #[test]
    fn endpoints_reproduce_the_component_rankings() {
        let cal = calibration(4, 12);
        let f_acq = scorer(vec![1.0, -0.5, 0.2], 0.0);
        let f_eng = scorer(vec![-0.3, 0.8, -0.1], 1.0);
        let at_zero = mix(f_acq.clone(), f_eng.clone(), 0.0, &cal).unwrap();
        let at_one = mix(f_acq.clone(), f_eng.clone(), 1.0, &cal).unwrap();
        let pure_acq = Policy::single(f_acq);
        let pure_eng = Policy::single(f_eng);
        for ctx in &calibration(9, 20).contexts {
            assert_eq!(
                at_zero.rank_context(ctx).unwrap(),
                pure_acq.rank_context(ctx).unwrap()
            );
            assert_eq!(
                at_one.rank_context(ctx).unwrap(),
                pure_eng.rank_context(ctx).unwrap()
            );
        }
    }

    #[test]
    fn interior_alpha_blends_standardized_scores() {
        let cal = calibration(4, 12);
        let f_acq = scorer(vec![1.0, 0.0, 0.0], 0.0);
        let f_eng = scorer(vec![0.0, 1.0, 0.0], 0.0);
        let policy = mix(f_acq, f_eng, 0.25, &cal).unwrap();
        let PolicyScorer::Hybrid(h) = &policy.scorer else { panic!("expected hybrid") };
        let item = [0.3, 0.9];
        let ctx = [0.1];
        let expected = 0.75 * ((0.3 - h.acquisition_mean) / h.acquisition_scale)
            + 0.25 * ((0.9 - h.engagement_mean) / h.engagement_scale);
        approx::assert_relative_eq!(
            h.score(&item, &ctx).unwrap(),
            expected,
            max_relative = 1e-12
        );
    }

    #[test]
    fn alpha_outside_unit_interval_is_rejected() {
        let cal = calibration(4, 12);
        for alpha in [-0.1, 1.1, f64::NAN] {
            let result = mix(scorer(vec![1.0, 0.0, 0.0], 0.0), scorer(vec![0.0, 1.0, 0.0], 0.0), alpha, &cal);
            assert!(matches!(result, Err(Error::Config(_))), "alpha {alpha}");
        }
    }

    #[test]
    fn constant_scorer_cannot_be_standardized() {
        let cal = calibration(4, 12);
        let constant = scorer(vec![0.0, 0.0, 0.0], 5.0);
        let varying = scorer(vec![1.0, 0.0, 0.0], 0.0);
        match mix(constant, varying, 0.5, &cal) {
            Err(Error::DegenerateScores { component: "acquisition" }) => {}
            other => panic!("expected DegenerateScores, got {other:?}"),
        }
    }

    #[test]
    fn empty_calibration_is_rejected() {
        let empty = Dataset::<f64> { spec: RewardSpec::purchase(), contexts: vec![] };
        let result = mix(scorer(vec![1.0], 0.0), scorer(vec![1.0], 0.0), 0.5, &empty);
        assert!(matches!(result, Err(Error::EmptyDataset)));
    }
}
