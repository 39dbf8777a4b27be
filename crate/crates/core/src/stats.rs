//! Bootstrap resampling helpers shared by online and offline evaluation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::rng::{child_rng, STREAM_BOOTSTRAP};

/// Number of bootstrap replicates and the confidence level they feed.
#[derive(Clone, Copy, Debug)]
pub struct BootstrapConfig {
    pub replicates: usize,
    /// Two-sided confidence level, e.g. `0.95`.
    pub confidence: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { replicates: 1000, confidence: 0.95, seed: 0 }
    }
}

impl BootstrapConfig {
    /// The generator for one replicate. Independent of evaluation order,
    /// so replicates can run in parallel and still reproduce.
    pub fn replicate_rng(&self, replicate: usize) -> ChaCha8Rng {
        child_rng(self.seed, STREAM_BOOTSTRAP, replicate as u64)
    }

    /// Lower and upper tail probabilities.
    pub fn tails(&self) -> (f64, f64) {
        let alpha = 1.0 - self.confidence;
        (alpha / 2.0, 1.0 - alpha / 2.0)
    }
}

/// Draws `n` indices uniformly with replacement from `0..n`.
pub fn resample_indices(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Linear-interpolated quantile of an unsorted sample. Returns `None`
/// for an empty sample.
pub fn quantile(samples: &[f64], q: f64) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("quantile input must not contain NaN"));
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Some(sorted[lo] * (1.0 - frac) + sorted[hi] * frac)
}

/// Percentile confidence interval of `replicates`, widened if necessary
/// to bracket the full-sample `estimate`.
pub fn percentile_ci(
    replicates: &[f64],
    estimate: f64,
    config: &BootstrapConfig,
) -> (f64, f64) {
    let (lo_q, hi_q) = config.tails();
    match (quantile(replicates, lo_q), quantile(replicates, hi_q)) {
        (Some(lo), Some(hi)) => (lo.min(estimate), hi.max(estimate)),
        _ => (estimate, estimate),
    }
}
