//! Segment-stratified lift of one policy over another.

use rayon::iter::{IntoParallelIterator, ParallelIterator};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::counterfactual::{estimate_over, weighted_rewards, SessionFrame};
use crate::eval::{ContextRanker, Metric};
use crate::logs::context::Dataset;
use crate::num::Real;
use crate::reward::{RankDiscount, RewardSpec};
use crate::stats::{percentile_ci, resample_indices, BootstrapConfig};

/// Relative improvement of a treatment policy over a baseline on one
/// traffic stratum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SegmentLift<T: Real> {
    pub metric: Metric,
    /// Price-intent bucket, `None` for the all-traffic row.
    pub bucket: Option<usize>,
    pub treatment: T,
    pub baseline: T,
    /// `(treatment - baseline) / baseline`.
    pub lift: T,
    pub ci_low: T,
    pub ci_high: T,
    pub n_sessions: usize,
}

/// Compares two policies on an eval set, overall and per price-intent
/// bucket.
///
/// Both policies are evaluated on exactly the same contexts, and each
/// bootstrap replicate resamples one set of sessions for both, so the
/// interval reflects the paired difference rather than two independent
/// noise sources. Strata whose baseline metric is zero have no defined
/// relative lift and are omitted from the result.
pub fn segment_lift<T: Real>(
    eval_set: &Dataset<T>,
    treatment: &(impl ContextRanker<T> + Sync),
    baseline: &(impl ContextRanker<T> + Sync),
    spec: &RewardSpec<T>,
    discount: &RankDiscount<T>,
    bootstrap: &BootstrapConfig,
) -> Result<Vec<SegmentLift<T>>> {
    eval_set.check_spec(spec)?;
    if eval_set.contexts.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let frame = SessionFrame::build(eval_set);
    let treated = frame.fold(&weighted_rewards(eval_set, treatment, discount)?);
    let base = frame.fold(&weighted_rewards(eval_set, baseline, discount)?);
    let metric = Metric::of_kind(spec.kind);

    let mut rows = Vec::new();
    for stratum in strata(&frame.segment) {
        let chosen = stratum_sessions(&frame.segment, stratum);
        if let Some(row) = lift_row(
            metric,
            stratum,
            &treated,
            &base,
            &frame.weight,
            &chosen,
            spec.self_normalize,
            bootstrap,
        ) {
            rows.push(row);
        }
    }
    Ok(rows)
}

/// The all-traffic stratum followed by each occupied bucket, ascending.
pub(crate) fn strata(segments: &[usize]) -> Vec<Option<usize>> {
    let mut buckets: Vec<usize> = segments.to_vec();
    buckets.sort_unstable();
    buckets.dedup();
    std::iter::once(None).chain(buckets.into_iter().map(Some)).collect()
}

/// Session slots belonging to a stratum.
pub(crate) fn stratum_sessions(segments: &[usize], stratum: Option<usize>) -> Vec<usize> {
    (0..segments.len())
        .filter(|&s| stratum.is_none_or(|b| segments[s] == b))
        .collect()
}

/// One stratum's paired lift, or `None` when the baseline metric is zero
/// there.
#[allow(clippy::too_many_arguments)]
fn lift_row<T: Real>(
    metric: Metric,
    bucket: Option<usize>,
    treated: &[T],
    base: &[T],
    weights: &[T],
    chosen: &[usize],
    self_normalize: bool,
    bootstrap: &BootstrapConfig,
) -> Option<SegmentLift<T>> {
    let m_base = estimate_over(base, weights, chosen, self_normalize)?;
    if m_base == T::zero() {
        return None;
    }
    let m_treated = estimate_over(treated, weights, chosen, self_normalize)?;
    let lift = (m_treated - m_base) / m_base;
    let replicates: Vec<f64> = (0..bootstrap.replicates)
        .into_par_iter()
        .filter_map(|r| {
            let draws = resample_indices(chosen.len(), &mut bootstrap.replicate_rng(r));
            let sub: Vec<usize> = draws.into_iter().map(|i| chosen[i]).collect();
            let b = estimate_over(base, weights, &sub, self_normalize)?;
            if b == T::zero() {
                return None;
            }
            let t = estimate_over(treated, weights, &sub, self_normalize)?;
            Some(((t - b) / b).widen())
        })
        .collect();
    let (ci_low, ci_high) = percentile_ci(&replicates, lift.widen(), bootstrap);
    Some(SegmentLift {
        metric,
        bucket,
        treatment: m_treated,
        baseline: m_base,
        lift,
        ci_low: T::of(ci_low),
        ci_high: T::of(ci_high),
        n_sessions: chosen.len(),
    })
}

/// Renders lift rows as the `segments.csv` artifact.
pub fn segments_csv<T: Real>(rows: &[SegmentLift<T>]) -> String {
    let mut out =
        String::from("metric,bucket,treatment,baseline,lift,ci_low,ci_high,n_sessions\n");
    for row in rows {
        let bucket = row.bucket.map_or_else(|| "all".to_owned(), |b| b.to_string());
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.metric.name(),
            bucket,
            row.treatment,
            row.baseline,
            row.lift,
            row.ci_low,
            row.ci_high,
            row.n_sessions
        ));
    }
    out
}
