//! Shopper intents: latent taste, price target, and session behaviour.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::num::Real;
use crate::sim::{SimConfig, QUALITY_DIM};
use crate::Result;

/// The latent state of one shopper for one session.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(bound = "")]
pub struct UserIntent<T: Real> {
    /// Unit-norm taste vector in quality space.
    pub intent_vector: Vec<T>,
    /// Which price tier the shopper is shopping in.
    pub price_intent_bucket: usize,
    /// The price the shopper has in mind; drawn inside the tier band.
    pub target_price: T,
    /// Queries the shopper will issue unless a purchase ends the session.
    pub browse_depth: usize,
    /// Probability a satisfying clicked item converts to a purchase.
    pub purchase_resolve: T,
    /// Log-price shift above `target_price` where browsing attention
    /// lands. Clicks favour items near the shifted price; purchases
    /// stay anchored at the target.
    pub aspiration: T,
}

/// Draws one shopper from the segment mix.
///
/// Premium shoppers browse longer, window-shop further above their
/// budget, and convert less readily, which is what makes click volume
/// and revenue pull rankings in different directions.
pub fn sample_intent<T: Real>(
    config: &SimConfig<T>,
    rng: &mut impl Rng,
) -> Result<UserIntent<T>> {
    let bucket = {
        let draw = rng.random::<f64>();
        let mut cumulative = 0.0;
        let mut chosen = config.n_buckets - 1;
        for (b, share) in config.segment_mix.iter().enumerate() {
            cumulative += share.widen();
            if draw < cumulative {
                chosen = b;
                break;
            }
        }
        chosen
    };
    let tendency = config.premium_tendency(bucket);

    let mut normal = |scale: T| -> T {
        let draw: f64 = rng.sample(StandardNormal);
        scale * T::of(draw)
    };
    let mut intent_vector = vec![
        (T::one() - tendency) + normal(config.intent_style_noise),
        tendency + normal(config.intent_style_noise),
        normal(config.intent_taste_scale),
        normal(config.intent_taste_scale),
    ];
    let norm = intent_vector.iter().map(|&v| v * v).sum::<T>().sqrt();
    if norm > T::of(1e-9) {
        for v in &mut intent_vector {
            *v /= norm;
        }
    } else {
        intent_vector = vec![T::zero(); QUALITY_DIM];
        intent_vector[0] = T::one();
    }

    let (band_low, band_high) = config.bucket_band(bucket);
    let ln_low = band_low.widen().ln();
    let ln_high = band_high.widen().ln();
    let target_price = T::of((ln_low + rng.random::<f64>() * (ln_high - ln_low)).exp());

    let rate = (config.depth_base + config.depth_gain * tendency).widen();
    let extra = if rate > 0.0 {
        Poisson::new(rate).expect("validated rate is positive").sample(rng) as usize
    } else {
        0
    };
    let browse_depth = (1 + extra).min(config.max_queries);

    let resolve = config.resolve_base - config.resolve_slope * tendency;
    let purchase_resolve = resolve.max(T::of(0.05)).min(T::one());

    Ok(UserIntent {
        intent_vector,
        price_intent_bucket: bucket,
        target_price,
        browse_depth,
        purchase_resolve,
        aspiration: config.aspiration_gain * tendency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::child_rng;
    use approx::assert_relative_eq;

    fn draw_many(config: &SimConfig<f64>, n: usize) -> Vec<UserIntent<f64>> {
        let mut rng = child_rng(11, 99, 0);
        (0..n).map(|_| sample_intent(config, &mut rng).unwrap()).collect()
    }

    #[test]
    fn intent_vectors_are_unit_norm() {
        let config = SimConfig::default();
        for intent in draw_many(&config, 200) {
            let norm: f64 = intent.intent_vector.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert_relative_eq!(norm, 1.0, epsilon = 1e-12);
            assert_eq!(intent.intent_vector.len(), QUALITY_DIM);
        }
    }

    #[test]
    fn intents_respect_their_price_band() {
        let config = SimConfig::default();
        for intent in draw_many(&config, 200) {
            let (low, high) = config.bucket_band(intent.price_intent_bucket);
            assert!(intent.target_price >= low && intent.target_price <= high);
            assert!(intent.browse_depth >= 1);
            assert!(intent.browse_depth <= config.max_queries);
            assert!(intent.purchase_resolve > 0.0 && intent.purchase_resolve <= 1.0);
        }
    }

    #[test]
    fn segment_mix_controls_bucket_frequencies() {
        let config = SimConfig {
            segment_mix: vec![0.0, 0.0, 1.0, 0.0, 0.0],
            ..SimConfig::default()
        };
        for intent in draw_many(&config, 50) {
            assert_eq!(intent.price_intent_bucket, 2);
        }

        let mix = SimConfig::<f64>::default();
        let draws = draw_many(&mix, 4000);
        let share0 =
            draws.iter().filter(|i| i.price_intent_bucket == 0).count() as f64 / 4000.0;
        assert!((share0 - 0.30).abs() < 0.03, "share0 = {share0}");
    }

    #[test]
    fn premium_shoppers_browse_more_and_resolve_less() {
        let config = SimConfig::<f64>::default();
        let draws = draw_many(&config, 4000);
        let mean = |bucket: usize, f: &dyn Fn(&UserIntent<f64>) -> f64| -> f64 {
            let picked: Vec<f64> =
                draws.iter().filter(|i| i.price_intent_bucket == bucket).map(f).collect();
            picked.iter().sum::<f64>() / picked.len() as f64
        };
        assert!(mean(4, &|i| i.browse_depth as f64) > mean(0, &|i| i.browse_depth as f64));
        assert!(mean(4, &|i| i.purchase_resolve) < mean(0, &|i| i.purchase_resolve));
        assert_eq!(mean(0, &|i| i.aspiration), 0.0);
        assert_relative_eq!(mean(4, &|i| i.aspiration), config.aspiration_gain, epsilon = 1e-9);
    }

    #[test]
    fn sampling_is_deterministic_in_the_rng() {
        let config = SimConfig::<f64>::default();
        let mut a = child_rng(5, 1, 0);
        let mut b = child_rng(5, 1, 0);
        let x = sample_intent(&config, &mut a).unwrap();
        let y = sample_intent(&config, &mut b).unwrap();
        assert_eq!(x, y);
    }
}
