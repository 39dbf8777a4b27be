//! Examination-curve recovery from logged click-through rates.
//!
//! Under a position-biased click model, the click-through rate at rank `r`
//! factors into examination times expected relevance. When the logging
//! policy places items independently of relevance (randomized traffic),
//! expected relevance is constant across ranks and the rank profile of
//! CTR is the examination curve itself up to a constant. Fitting
//! `ln CTR = a - exponent * ln r` by least squares recovers the
//! power-law exponent; the returned curve is renormalized so rank 1 has
//! discount 1.

use crate::error::{Error, Result};
use crate::logs::records::SessionRecord;
use crate::num::Real;
use crate::reward::discount::RankDiscount;

/// Fits a power-law examination curve to per-rank click-through rates.
///
/// Aggregates impressions and clicks per displayed rank over all queries,
/// then regresses log CTR on log rank over the ranks that received at
/// least one impression and one click. Needs two such ranks to determine
/// a slope. The fitted discount is `rank^-exponent`, tabulated out to the
/// deepest observed rank.
pub fn fit_propensity_curve<T: Real>(sessions: &[SessionRecord<T>]) -> Result<RankDiscount<T>> {
    let mut impressions: Vec<u64> = Vec::new();
    let mut clicks: Vec<u64> = Vec::new();
    for session in sessions {
        for query in &session.queries {
            if query.ranking.len() > impressions.len() {
                impressions.resize(query.ranking.len(), 0);
                clicks.resize(query.ranking.len(), 0);
            }
            for slot in 0..query.ranking.len() {
                impressions[slot] += 1;
            }
            for &slot in &query.clicks {
                if slot < clicks.len() {
                    clicks[slot] += 1;
                }
            }
        }
    }

    let points: Vec<(f64, f64)> = impressions
        .iter()
        .zip(&clicks)
        .enumerate()
        .filter(|&(_, (&imp, &clk))| imp > 0 && clk > 0)
        .map(|(slot, (&imp, &clk))| {
            let rank = (slot + 1) as f64;
            (rank.ln(), (clk as f64 / imp as f64).ln())
        })
        .collect();
    if points.len() < 2 {
        return Err(Error::PropensityFit(format!(
            "need clicks at >= 2 distinct ranks, found {}",
            points.len()
        )));
    }

    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let exponent = -(sxy / sxx);

    let table: Vec<T> =
        (1..=impressions.len()).map(|rank| T::of((rank as f64).powf(-exponent))).collect();
    Ok(RankDiscount::Fitted { exponent: T::of(exponent), curve: Some(table) })
}
