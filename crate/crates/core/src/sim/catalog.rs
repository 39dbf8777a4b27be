//! Catalog generation: items with prices, latent quality, and features.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::num::Real;
use crate::rng::{child_rng, STREAM_CATALOG};
use crate::sim::SimConfig;
use crate::Result;

/// Latent quality coordinates: budget style, premium style, two tastes.
pub const QUALITY_DIM: usize = 4;

/// Observable item features: noisy quality plus two price encodings.
pub const FEATURE_DIM: usize = QUALITY_DIM + 2;

/// One sellable item.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(bound = "")]
pub struct Item<T: Real> {
    pub item_id: u64,
    pub price: T,
    /// Latent quality; drives clicks and purchases but is never logged.
    pub quality: Vec<T>,
    /// What a ranking model is allowed to see.
    pub features: Vec<T>,
}

/// The full inventory plus the price-tier boundaries used for reporting.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(bound = "")]
pub struct ItemCatalog<T: Real> {
    pub items: Vec<Item<T>>,
    /// Interior tier edges; `n_buckets - 1` ascending prices.
    pub bucket_edges: Vec<T>,
}

impl<T: Real> ItemCatalog<T> {
    pub fn n_buckets(&self) -> usize {
        self.bucket_edges.len() + 1
    }

    /// Price tier of a price: the number of edges at or below it.
    pub fn bucket_of(&self, price: T) -> usize {
        self.bucket_edges.partition_point(|edge| price >= *edge)
    }

    pub fn item(&self, item_id: u64) -> Option<&Item<T>> {
        self.items.iter().find(|item| item.item_id == item_id)
    }
}

/// Samples a catalog. Prices are stratified across tiers round-robin,
/// so every tier holds at least `n_items / n_buckets` items.
///
/// An item's position `u` on the log-price axis doubles as its premium
/// tendency: budget style fades and premium style (plus overall quality
/// magnitude) grows as `u` rises.
pub fn sample_catalog<T: Real>(config: &SimConfig<T>, seed: u64) -> Result<ItemCatalog<T>> {
    config.validate()?;
    let mut rng = child_rng(seed, STREAM_CATALOG, 0);
    let ln_min = config.price_min.widen().ln();
    let ln_max = config.price_max.widen().ln();

    fn normal<T: Real>(rng: &mut impl Rng, scale: T) -> T {
        let draw: f64 = rng.sample(StandardNormal);
        scale * T::of(draw)
    }

    let mut items = Vec::with_capacity(config.n_items);
    for index in 0..config.n_items {
        let stratum = index % config.n_buckets;
        let u = (stratum as f64 + rng.random::<f64>()) / config.n_buckets as f64;
        let price = T::of((ln_min + u * (ln_max - ln_min)).exp());
        let tendency = T::of(u);

        let mut quality = vec![
            (T::one() - tendency) + normal(&mut rng, config.style_noise),
            tendency + normal(&mut rng, config.style_noise),
            normal(&mut rng, config.taste_scale),
            normal(&mut rng, config.taste_scale),
        ];
        // Unit direction times a mild magnitude premium: expensive items
        // are somewhat nicer, but taste match stays the dominant signal.
        let norm = quality.iter().map(|&q| q * q).sum::<T>().sqrt().max(T::of(1e-9));
        let boost = (T::one() + config.premium_gain * tendency) / norm;
        for q in &mut quality {
            *q *= boost;
        }

        let mut features: Vec<T> = quality
            .iter()
            .map(|&q| q + normal(&mut rng, config.feature_noise))
            .collect();
        features.push(tendency);
        features.push(T::one() - tendency);

        items.push(Item { item_id: index as u64, price, quality, features });
    }

    let bucket_edges =
        (1..config.n_buckets).map(|b| config.bucket_band(b).0).collect();
    Ok(ItemCatalog { items, bucket_edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    fn default_catalog() -> ItemCatalog<f64> {
        sample_catalog(&SimConfig::default(), 7).unwrap()
    }

    #[test]
    fn catalog_has_requested_shape() {
        let config = SimConfig::<f64>::default();
        let catalog = default_catalog();
        assert_eq!(catalog.items.len(), config.n_items);
        assert_eq!(catalog.n_buckets(), config.n_buckets);
        for item in &catalog.items {
            assert_eq!(item.quality.len(), QUALITY_DIM);
            assert_eq!(item.features.len(), FEATURE_DIM);
            assert!(item.price >= config.price_min && item.price <= config.price_max);
        }
    }

    #[test]
    fn every_price_tier_is_stocked() {
        let config = SimConfig::<f64> { n_items: 5, ..SimConfig::default() };
        let catalog = sample_catalog(&config, 1).unwrap();
        let mut counts = vec![0usize; catalog.n_buckets()];
        for item in &catalog.items {
            counts[catalog.bucket_of(item.price)] += 1;
        }
        assert!(counts.iter().all(|&c| c > 0), "counts {counts:?}");
    }

    #[test]
    fn premium_items_carry_more_quality_mass() {
        let catalog = default_catalog();
        let magnitude = |items: &[&Item<f64>]| -> f64 {
            let total: f64 = items
                .iter()
                .map(|item| item.quality.iter().map(|q| q * q).sum::<f64>().sqrt())
                .sum();
            total / items.len() as f64
        };
        let budget: Vec<&Item<f64>> =
            catalog.items.iter().filter(|i| catalog.bucket_of(i.price) == 0).collect();
        let premium: Vec<&Item<f64>> =
            catalog.items.iter().filter(|i| catalog.bucket_of(i.price) == 4).collect();
        assert!(magnitude(&premium) > magnitude(&budget));
    }

    #[test]
    fn bucket_of_matches_edges() {
        let catalog = default_catalog();
        assert_eq!(catalog.bucket_of(1.0), 0);
        assert_eq!(catalog.bucket_of(1000.0), 4);
        let edge = catalog.bucket_edges[0];
        assert_eq!(catalog.bucket_of(edge), 1);
        let below = edge - 1e-9;
        assert_eq!(catalog.bucket_of(below), 0);
    }

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let config = SimConfig::<f64>::default();
        let a = sample_catalog(&config, 42).unwrap();
        let b = sample_catalog(&config, 42).unwrap();
        let c = sample_catalog(&config, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let config = SimConfig::<f64> { n_items: 2, ..SimConfig::default() };
        assert!(matches!(sample_catalog(&config, 0), Err(Error::Config(_))));
    }
}
