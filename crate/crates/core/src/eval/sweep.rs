//! Tracing metric trade-offs across the acquisition/engagement blend.

use rayon::iter::{IntoParallelIterator, ParallelIterator};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::counterfactual::{estimate_over, weighted_rewards, SessionFrame};
use crate::eval::segments::{strata, stratum_sessions};
use crate::eval::Metric;
use crate::logs::context::Dataset;
use crate::num::Real;
use crate::policy::{mix, Policy, ScoringFunction};
use crate::reward::RankDiscount;
use crate::stats::{percentile_ci, resample_indices, BootstrapConfig};

/// One point on a sweep curve: a blend weight, a metric, a stratum, and
/// the counterfactual estimate there with its lift over the pure
/// acquisition policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SweepPoint<T: Real> {
    pub alpha: T,
    pub metric: Metric,
    /// Price-intent bucket, `None` for the all-traffic row.
    pub bucket: Option<usize>,
    pub estimate: T,
    /// Relative change versus the same stratum under `alpha = 0`.
    pub lift: T,
    pub ci_low: T,
    pub ci_high: T,
}

/// The full sweep: every (alpha, metric, stratum) point, ordered by
/// alpha first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SweepCurve<T: Real> {
    pub alphas: Vec<T>,
    pub points: Vec<SweepPoint<T>>,
}

impl<T: Real> SweepCurve<T> {
    /// Renders the curve as the `sweep.csv` artifact.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,metric,bucket,estimate,lift,ci_low,ci_high\n");
        for p in &self.points {
            let bucket = p.bucket.map_or_else(|| "all".to_owned(), |b| b.to_string());
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                p.alpha,
                p.metric.name(),
                bucket,
                p.estimate,
                p.lift,
                p.ci_low,
                p.ci_high
            ));
        }
        out
    }
}

/// The standard eleven-point grid `{0, 0.1, ..., 1}`.
pub fn default_alpha_grid<T: Real>() -> Vec<T> {
    (0..=10).map(|i| T::of(f64::from(i) / 10.0)).collect()
}

/// Sweeps the blend weight over `alphas`, evaluating each mixed policy
/// counterfactually on every eval set.
///
/// Each eval set carries its own reward spec, so passing one set per
/// metric (expected clicks, purchases, revenue) yields the full
/// trade-off picture in one call. Lifts are taken against the `alpha =
/// 0` policy on the same stratum, with every blend sharing one set of
/// bootstrap resamples per stratum; the pairing makes the `alpha = 0`
/// rows exactly zero and keeps adjacent points comparable. Strata where
/// the baseline metric is zero are omitted.
pub fn alpha_sweep<T: Real>(
    acquisition: &ScoringFunction<T>,
    engagement: &ScoringFunction<T>,
    alphas: &[T],
    eval_sets: &[Dataset<T>],
    calibration: &Dataset<T>,
    discount: &RankDiscount<T>,
    bootstrap: &BootstrapConfig,
) -> Result<SweepCurve<T>> {
    if alphas.is_empty() {
        return Err(Error::Config("alpha grid is empty".to_owned()));
    }
    for &alpha in alphas {
        if !(T::zero()..=T::one()).contains(&alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {alpha}")));
        }
    }
    if eval_sets.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut grid = alphas.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();

    let baseline = mix(acquisition.clone(), engagement.clone(), T::zero(), calibration)?;
    let policies: Vec<Policy<T>> = grid
        .iter()
        .map(|&alpha| mix(acquisition.clone(), engagement.clone(), alpha, calibration))
        .collect::<Result<_>>()?;

    // Sortable keys: (grid index, eval-set index, stratum) so the final
    // curve reads alpha-major in the caller's eval-set order.
    let mut keyed: Vec<((usize, usize, usize), SweepPoint<T>)> = Vec::new();
    for (set_idx, eval_set) in eval_sets.iter().enumerate() {
        if eval_set.contexts.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let metric = Metric::of_kind(eval_set.spec.kind);
        let self_normalize = eval_set.spec.self_normalize;
        let frame = SessionFrame::build(eval_set);
        let base_values = frame.fold(&weighted_rewards(eval_set, &baseline, discount)?);
        let blend_values: Vec<Vec<T>> = policies
            .iter()
            .map(|p| Ok(frame.fold(&weighted_rewards(eval_set, p, discount)?)))
            .collect::<Result<_>>()?;

        for stratum in strata(&frame.segment) {
            let chosen = stratum_sessions(&frame.segment, stratum);
            let Some(m_base) = estimate_over(&base_values, &frame.weight, &chosen, self_normalize)
            else {
                continue;
            };
            if m_base == T::zero() {
                continue;
            }
            // One resample per replicate, reused across every alpha.
            let replicate_lifts: Vec<Vec<f64>> = (0..bootstrap.replicates)
                .into_par_iter()
                .filter_map(|r| {
                    let draws = resample_indices(chosen.len(), &mut bootstrap.replicate_rng(r));
                    let sub: Vec<usize> = draws.into_iter().map(|i| chosen[i]).collect();
                    let b = estimate_over(&base_values, &frame.weight, &sub, self_normalize)?;
                    if b == T::zero() {
                        return None;
                    }
                    blend_values
                        .iter()
                        .map(|values| {
                            let m = estimate_over(values, &frame.weight, &sub, self_normalize)?;
                            Some(((m - b) / b).widen())
                        })
                        .collect()
                })
                .collect();
            for (grid_idx, values) in blend_values.iter().enumerate() {
                let estimate = estimate_over(values, &frame.weight, &chosen, self_normalize)
                    .expect("stratum with defined baseline has weight mass");
                let lift = (estimate - m_base) / m_base;
                let lifts: Vec<f64> = replicate_lifts.iter().map(|reps| reps[grid_idx]).collect();
                let (ci_low, ci_high) = percentile_ci(&lifts, lift.widen(), bootstrap);
                keyed.push((
                    (grid_idx, set_idx, stratum.map_or(0, |b| b + 1)),
                    SweepPoint {
                        alpha: grid[grid_idx],
                        metric,
                        bucket: stratum,
                        estimate,
                        lift,
                        ci_low: T::of(ci_low),
                        ci_high: T::of(ci_high),
                    },
                ));
            }
        }
    }
    keyed.sort_by_key(|(key, _)| *key);
    Ok(SweepCurve { alphas: grid, points: keyed.into_iter().map(|(_, p)| p).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::counterfactual::counterfactual_metric;
    use crate::logs::build_eval_set;
    use crate::policy::LinearScorer;
    use crate::reward::RewardSpec;
    use crate::rng::STREAM_BEHAVIOR;
    use crate::sim::{sample_catalog, simulate_batch, RankingPolicy, SimConfig, FEATURE_DIM};

    fn linear(pairs: &[(usize, f64)]) -> ScoringFunction<f64> {
        let config = SimConfig::<f64>::default();
        let dim = FEATURE_DIM + crate::sim::context_dim(config.n_buckets);
        let mut weights = vec![0.0; dim];
        for &(idx, w) in pairs {
            weights[idx] = w;
        }
        ScoringFunction::Linear(LinearScorer { weights, bias: 0.0 })
    }

    fn style_scorer() -> ScoringFunction<f64> {
        linear(&[(0, 1.0), (1, 1.0)])
    }

    fn cheap_scorer() -> ScoringFunction<f64> {
        linear(&[(5, 1.0)])
    }

    fn logged_sets(n_sessions: usize, seed: u64) -> Vec<Dataset<f64>> {
        let config = SimConfig::<f64>::default();
        let catalog = sample_catalog(&config, 5).unwrap();
        let sessions = simulate_batch(
            &RankingPolicy::Random,
            &catalog,
            &config,
            n_sessions,
            seed,
            STREAM_BEHAVIOR,
        )
        .unwrap();
        vec![
            build_eval_set(&sessions, &RewardSpec::engagement()).unwrap(),
            build_eval_set(&sessions, &RewardSpec::purchase()).unwrap(),
        ]
    }

    fn fast_bootstrap() -> BootstrapConfig {
        BootstrapConfig { replicates: 200, ..BootstrapConfig::default() }
    }

    #[test]
    fn default_grid_covers_the_unit_interval_in_tenths() {
        let grid = default_alpha_grid::<f64>();
        assert_eq!(grid.len(), 11);
        assert_eq!(grid[0], 0.0);
        assert_eq!(grid[10], 1.0);
        approx::assert_relative_eq!(grid[3], 0.3, max_relative = 1e-12);
    }

    #[test]
    fn alpha_zero_rows_have_exactly_zero_lift() {
        let sets = logged_sets(400, 21);
        let curve = alpha_sweep(
            &cheap_scorer(),
            &style_scorer(),
            &[0.0, 0.5, 1.0],
            &sets,
            &sets[0],
            &RankDiscount::Log,
            &fast_bootstrap(),
        )
        .unwrap();
        let zero_rows: Vec<_> = curve.points.iter().filter(|p| p.alpha == 0.0).collect();
        assert!(!zero_rows.is_empty());
        for p in zero_rows {
            assert_eq!(p.lift, 0.0);
            assert_eq!(p.ci_low, 0.0);
            assert_eq!(p.ci_high, 0.0);
        }
    }

    #[test]
    fn endpoint_estimates_match_the_pure_policies() {
        let sets = logged_sets(400, 22);
        let curve = alpha_sweep(
            &cheap_scorer(),
            &style_scorer(),
            &[0.0, 1.0],
            &sets,
            &sets[0],
            &RankDiscount::Log,
            &fast_bootstrap(),
        )
        .unwrap();
        for (set, scorer, alpha) in [
            (&sets[0], cheap_scorer(), 0.0),
            (&sets[0], style_scorer(), 1.0),
            (&sets[1], cheap_scorer(), 0.0),
        ] {
            let direct = counterfactual_metric(
                set,
                &Policy::single(scorer),
                &set.spec,
                &RankDiscount::Log,
                &fast_bootstrap(),
            )
            .unwrap();
            let point = curve
                .points
                .iter()
                .find(|p| {
                    p.alpha == alpha && p.metric == direct.metric && p.bucket.is_none()
                })
                .unwrap();
            approx::assert_relative_eq!(point.estimate, direct.value, max_relative = 1e-9);
        }
    }

    #[test]
    fn grid_is_sorted_and_deduplicated() {
        let sets = logged_sets(150, 23);
        let curve = alpha_sweep(
            &cheap_scorer(),
            &style_scorer(),
            &[1.0, 0.5, 0.0, 0.5],
            &sets[..1],
            &sets[0],
            &RankDiscount::Log,
            &fast_bootstrap(),
        )
        .unwrap();
        assert_eq!(curve.alphas, vec![0.0, 0.5, 1.0]);
        let overall_alphas: Vec<f64> = curve
            .points
            .iter()
            .filter(|p| p.bucket.is_none())
            .map(|p| p.alpha)
            .collect();
        assert_eq!(overall_alphas, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn invalid_grids_are_rejected() {
        let sets = logged_sets(150, 24);
        for grid in [vec![], vec![-0.1], vec![1.5], vec![f64::NAN]] {
            let result = alpha_sweep(
                &cheap_scorer(),
                &style_scorer(),
                &grid,
                &sets[..1],
                &sets[0],
                &RankDiscount::Log,
                &fast_bootstrap(),
            );
            assert!(matches!(result, Err(Error::Config(_))), "grid {grid:?}");
        }
    }

    #[test]
    fn csv_is_alpha_major_with_a_fixed_header() {
        let sets = logged_sets(250, 25);
        let curve = alpha_sweep(
            &cheap_scorer(),
            &style_scorer(),
            &[0.0, 1.0],
            &sets,
            &sets[0],
            &RankDiscount::Log,
            &fast_bootstrap(),
        )
        .unwrap();
        let csv = curve.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "alpha,metric,bucket,estimate,lift,ci_low,ci_high");
        assert!(lines[1].starts_with("0,ExpClicks,all,"));
        assert_eq!(lines.len(), 1 + curve.points.len());
        // Within one alpha both metrics appear before the next alpha starts.
        let first_one = lines.iter().position(|l| l.starts_with("1,")).unwrap();
        assert!(lines[1..first_one].iter().all(|l| l.starts_with("0,")));
        assert!(lines[first_one..].iter().all(|l| l.starts_with("1,")));
    }
}
