//! Paired online comparison of two ranking policies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::logs::SessionRecord;
use crate::num::Real;
use crate::rng::{STREAM_BEHAVIOR, STREAM_BEHAVIOR_B};
use crate::sim::{simulate_batch, ItemCatalog, RankingPolicy, SimConfig};
use crate::stats::{percentile_ci, resample_indices, BootstrapConfig};
use crate::Result;

/// Per-session outcome summary used for reporting.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(bound = "")]
pub struct SessionStats<T: Real> {
    pub bucket: usize,
    pub queries: usize,
    pub clicks: usize,
    pub engaged: bool,
    pub purchased: bool,
    pub revenue: T,
}

impl<T: Real> SessionStats<T> {
    pub fn of(session: &SessionRecord<T>) -> Self {
        SessionStats {
            bucket: session.intent_bucket,
            queries: session.queries.len(),
            clicks: session.click_count(),
            engaged: session.has_click(),
            purchased: session.purchase.is_some(),
            revenue: session.purchase.as_ref().map_or(T::zero(), |p| p.price),
        }
    }
}

/// Relative change of one metric, treatment over control, with a
/// paired-bootstrap confidence interval.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(bound = "")]
pub struct MetricLift<T: Real> {
    pub metric: String,
    /// `None` for the overall population, otherwise one price segment.
    pub bucket: Option<usize>,
    pub treatment: T,
    pub control: T,
    /// `(treatment - control) / control`.
    pub lift: T,
    pub ci_low: T,
    pub ci_high: T,
}

/// Everything an A/B run reports.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(bound = "")]
pub struct AbReport<T: Real> {
    pub n_sessions: usize,
    pub bootstrap_replicates: usize,
    pub confidence: f64,
    pub seed: u64,
    pub lifts: Vec<MetricLift<T>>,
}

impl<T: Real> AbReport<T> {
    /// Finds a lift row by metric name and segment.
    pub fn lift(&self, metric: &str, bucket: Option<usize>) -> Option<&MetricLift<T>> {
        self.lifts.iter().find(|l| l.metric == metric && l.bucket == bucket)
    }
}

#[derive(Clone, Copy)]
enum MetricKind {
    Engaged,
    Clicks,
    Queries,
    Purchases,
    Revenue,
}

impl MetricKind {
    fn name(self) -> &'static str {
        match self {
            MetricKind::Engaged => "engaged_sessions",
            MetricKind::Clicks => "clicks",
            MetricKind::Queries => "queries",
            MetricKind::Purchases => "purchases",
            MetricKind::Revenue => "revenue",
        }
    }

    fn value<T: Real>(self, stats: &SessionStats<T>) -> f64 {
        match self {
            MetricKind::Engaged => stats.engaged as u8 as f64,
            MetricKind::Clicks => stats.clicks as f64,
            MetricKind::Queries => stats.queries as f64,
            MetricKind::Purchases => stats.purchased as u8 as f64,
            MetricKind::Revenue => stats.revenue.widen(),
        }
    }
}

struct MetricColumn {
    kind: MetricKind,
    bucket: Option<usize>,
    treatment: Vec<f64>,
    control: Vec<f64>,
}

/// Runs both policies against the same stream of shoppers and reports
/// per-metric lifts with paired-bootstrap confidence intervals.
///
/// Session `i` is the same shopper in both arms; only the behaviour
/// noise differs, so between-shopper variance cancels out of every
/// lift. Metrics whose control total is zero are omitted. Resampling
/// replicates where it is zero are skipped.
pub fn run_ab_test<T: Real>(
    treatment: &RankingPolicy<T>,
    control: &RankingPolicy<T>,
    catalog: &ItemCatalog<T>,
    config: &SimConfig<T>,
    n_sessions: usize,
    bootstrap: &BootstrapConfig,
    seed: u64,
) -> Result<AbReport<T>> {
    let arm_t = simulate_batch(treatment, catalog, config, n_sessions, seed, STREAM_BEHAVIOR)?;
    let arm_c = simulate_batch(control, catalog, config, n_sessions, seed, STREAM_BEHAVIOR_B)?;
    let stats_t: Vec<SessionStats<T>> = arm_t.iter().map(SessionStats::of).collect();
    let stats_c: Vec<SessionStats<T>> = arm_c.iter().map(SessionStats::of).collect();

    let overall = [
        MetricKind::Engaged,
        MetricKind::Clicks,
        MetricKind::Queries,
        MetricKind::Purchases,
        MetricKind::Revenue,
    ];
    let per_bucket = [
        MetricKind::Engaged,
        MetricKind::Clicks,
        MetricKind::Purchases,
        MetricKind::Revenue,
    ];
    let mut specs: Vec<(MetricKind, Option<usize>)> =
        overall.iter().map(|&k| (k, None)).collect();
    for b in 0..config.n_buckets {
        specs.extend(per_bucket.iter().map(|&k| (k, Some(b))));
    }

    let columns: Vec<MetricColumn> = specs
        .into_iter()
        .map(|(kind, bucket)| {
            let pick = |stats: &SessionStats<T>| -> f64 {
                match bucket {
                    Some(b) if stats.bucket != b => 0.0,
                    _ => kind.value(stats),
                }
            };
            MetricColumn {
                kind,
                bucket,
                treatment: stats_t.iter().map(pick).collect(),
                control: stats_c.iter().map(pick).collect(),
            }
        })
        .collect();

    // One shared set of resampled sessions per replicate, so every
    // metric's interval reflects the same hypothetical traffic.
    let replicate_sums: Vec<Vec<(f64, f64)>> = (0..bootstrap.replicates)
        .into_par_iter()
        .map(|r| {
            let indices = resample_indices(n_sessions, &mut bootstrap.replicate_rng(r));
            columns
                .iter()
                .map(|col| {
                    let t: f64 = indices.iter().map(|&i| col.treatment[i]).sum();
                    let c: f64 = indices.iter().map(|&i| col.control[i]).sum();
                    (t, c)
                })
                .collect()
        })
        .collect();

    let mut lifts = Vec::new();
    for (m, col) in columns.iter().enumerate() {
        let total_t: f64 = col.treatment.iter().sum();
        let total_c: f64 = col.control.iter().sum();
        if total_c == 0.0 {
            continue;
        }
        let lift = (total_t - total_c) / total_c;
        let replicate_lifts: Vec<f64> = replicate_sums
            .iter()
            .filter_map(|sums| {
                let (t, c) = sums[m];
                (c != 0.0).then(|| (t - c) / c)
            })
            .collect();
        let (ci_low, ci_high) = percentile_ci(&replicate_lifts, lift, bootstrap);
        lifts.push(MetricLift {
            metric: col.kind.name().to_string(),
            bucket: col.bucket,
            treatment: T::of(total_t),
            control: T::of(total_c),
            lift: T::of(lift),
            ci_low: T::of(ci_low),
            ci_high: T::of(ci_high),
        });
    }

    Ok(AbReport {
        n_sessions,
        bootstrap_replicates: bootstrap.replicates,
        confidence: bootstrap.confidence,
        seed,
        lifts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::sample_catalog;

    fn fixture() -> (ItemCatalog<f64>, SimConfig<f64>) {
        let config = SimConfig { n_items: 200, ..SimConfig::default() };
        let catalog = sample_catalog(&config, 5).unwrap();
        (catalog, config)
    }

    fn boot(seed: u64) -> BootstrapConfig {
        BootstrapConfig { replicates: 300, confidence: 0.95, seed }
    }

    #[test]
    fn null_comparison_shows_no_overall_effect() {
        let (catalog, config) = fixture();
        let report = run_ab_test(
            &RankingPolicy::<f64>::Random,
            &RankingPolicy::Random,
            &catalog,
            &config,
            600,
            &boot(21),
            21,
        )
        .unwrap();
        for name in ["clicks", "engaged_sessions", "queries"] {
            let row = report.lift(name, None).unwrap();
            assert!(
                row.ci_low <= 0.0 && 0.0 <= row.ci_high,
                "{name}: [{}, {}]",
                row.ci_low,
                row.ci_high
            );
        }
    }

    #[test]
    fn oracle_beats_random_on_engagement() {
        let (catalog, config) = fixture();
        let report = run_ab_test(
            &RankingPolicy::<f64>::Oracle,
            &RankingPolicy::Random,
            &catalog,
            &config,
            600,
            &boot(8),
            8,
        )
        .unwrap();
        let clicks = report.lift("clicks", None).unwrap();
        assert!(clicks.lift > 0.0);
        assert!(clicks.ci_low > 0.0, "ci_low {}", clicks.ci_low);
        let engaged = report.lift("engaged_sessions", None).unwrap();
        assert!(engaged.ci_low > 0.0);
    }

    #[test]
    fn report_structure_is_complete_and_ordered() {
        let (catalog, config) = fixture();
        let report = run_ab_test(
            &RankingPolicy::<f64>::Oracle,
            &RankingPolicy::Random,
            &catalog,
            &config,
            400,
            &boot(3),
            3,
        )
        .unwrap();
        assert_eq!(report.n_sessions, 400);
        for row in &report.lifts {
            assert!(row.ci_low <= row.lift && row.lift <= row.ci_high);
            assert!(row.control > 0.0);
        }
        assert!(report.lift("revenue", None).is_some());
        let text = serde_json::to_string(&report).unwrap();
        let back: AbReport<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(report, back);
    }

    #[test]
    fn reports_are_deterministic() {
        let (catalog, config) = fixture();
        let run = || {
            run_ab_test(
                &RankingPolicy::<f64>::Oracle,
                &RankingPolicy::Random,
                &catalog,
                &config,
                200,
                &boot(5),
                5,
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }
}
