//! Noise-free relevance tables for sanity checks and diagnostics.

use serde::{Deserialize, Serialize};

use crate::num::Real;
use crate::sim::{ItemCatalog, SimConfig, UserIntent, QUALITY_DIM};
use crate::Result;

/// True click probability of one item for an archetypal shopper.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(bound = "")]
pub struct ItemRelevance<T: Real> {
    pub item_id: u64,
    pub relevance: T,
}

/// The noise-free shopper of one price segment: bucket-centred style,
/// no idiosyncratic taste, target price at the middle of the band, and
/// the segment's browsing aspiration.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(bound = "")]
pub struct BucketArchetype<T: Real> {
    pub bucket: usize,
    pub intent_vector: Vec<T>,
    pub target_price: T,
    /// One entry per catalog item, in catalog order.
    pub relevance: Vec<ItemRelevance<T>>,
}

/// True relevance of every item for every segment archetype.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(bound = "")]
pub struct GroundTruth<T: Real> {
    pub archetypes: Vec<BucketArchetype<T>>,
}

/// Tabulates exact click probabilities for the archetypal shopper of
/// each segment. Useful for eyeballing what a perfect ranker would
/// show and for testing estimators against a known target.
pub fn ground_truth<T: Real>(
    catalog: &ItemCatalog<T>,
    config: &SimConfig<T>,
) -> Result<GroundTruth<T>> {
    config.validate()?;
    let mut archetypes = Vec::with_capacity(config.n_buckets);
    for bucket in 0..config.n_buckets {
        let tendency = config.premium_tendency(bucket);
        let mut intent_vector = vec![T::zero(); QUALITY_DIM];
        intent_vector[0] = T::one() - tendency;
        intent_vector[1] = tendency;
        let norm = intent_vector.iter().map(|&v| v * v).sum::<T>().sqrt();
        for v in &mut intent_vector {
            *v /= norm;
        }
        let (low, high) = config.bucket_band(bucket);
        let target_price = T::of((low.widen().ln() * 0.5 + high.widen().ln() * 0.5).exp());

        let intent = UserIntent {
            intent_vector,
            price_intent_bucket: bucket,
            target_price,
            browse_depth: 1,
            purchase_resolve: T::one(),
            aspiration: config.aspiration_gain * tendency,
        };
        let relevance = catalog
            .items
            .iter()
            .map(|item| {
                Ok(ItemRelevance {
                    item_id: item.item_id,
                    relevance: config.click.relevance_prob(item, &intent)?,
                })
            })
            .collect::<Result<_>>()?;
        archetypes.push(BucketArchetype {
            bucket,
            intent_vector: intent.intent_vector,
            target_price,
            relevance,
        });
    }
    Ok(GroundTruth { archetypes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::sample_catalog;

    #[test]
    fn covers_every_segment_and_item() {
        let config = SimConfig::<f64> { n_items: 120, ..SimConfig::default() };
        let catalog = sample_catalog(&config, 2).unwrap();
        let truth = ground_truth(&catalog, &config).unwrap();
        assert_eq!(truth.archetypes.len(), config.n_buckets);
        for arch in &truth.archetypes {
            assert_eq!(arch.relevance.len(), config.n_items);
            let norm: f64 = arch.intent_vector.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
            let (low, high) = config.bucket_band(arch.bucket);
            assert!(arch.target_price > low && arch.target_price < high);
            for r in &arch.relevance {
                assert!(r.relevance > 0.0 && r.relevance < 1.0);
            }
        }
    }

    #[test]
    fn archetypes_prefer_their_own_tier() {
        let config = SimConfig::<f64>::default();
        let catalog = sample_catalog(&config, 2).unwrap();
        let truth = ground_truth(&catalog, &config).unwrap();
        // Average relevance the budget archetype assigns to budget-tier
        // items should beat what it assigns to premium-tier items.
        let mean_for = |arch: &BucketArchetype<f64>, bucket: usize| -> f64 {
            let picked: Vec<f64> = arch
                .relevance
                .iter()
                .filter(|r| {
                    catalog.bucket_of(catalog.item(r.item_id).unwrap().price) == bucket
                })
                .map(|r| r.relevance)
                .collect();
            picked.iter().sum::<f64>() / picked.len() as f64
        };
        let budget = &truth.archetypes[0];
        assert!(mean_for(budget, 0) > mean_for(budget, 4));
        let premium = &truth.archetypes[4];
        assert!(mean_for(premium, 4) > mean_for(premium, 0));
    }

    #[test]
    fn tabulation_is_deterministic() {
        let config = SimConfig::<f64> { n_items: 60, ..SimConfig::default() };
        let catalog = sample_catalog(&config, 9).unwrap();
        let a = ground_truth(&catalog, &config).unwrap();
        let b = ground_truth(&catalog, &config).unwrap();
        assert_eq!(a, b);
    }
}
