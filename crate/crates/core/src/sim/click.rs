//! Position-biased examination, clicks, and purchase resolution.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::num::Real;
use crate::sim::{Item, UserIntent};
use crate::{Error, Result};

/// Behavioural parameters of the click model.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(bound = "", deny_unknown_fields, default)]
pub struct ClickModelParams<T: Real> {
    /// Position-bias severity: rank `r` is examined with probability
    /// `r^-examination_exponent`.
    pub examination_exponent: T,
    /// Steepness of the affinity-to-click response.
    pub relevance_sharpness: T,
    /// Affinity at which a perfectly priced item clicks at one half.
    pub relevance_midpoint: T,
    /// Penalty per unit of log-price mismatch with the target price.
    pub price_damping: T,
    /// Minimum click probability for a clicked item to be buyable.
    pub purchase_threshold: T,
    /// Penalty per unit of log-price mismatch applied to the purchase
    /// resolve. Measured from the budget target itself, not the
    /// aspiration-shifted browsing price, and steeper than
    /// `price_damping`: shoppers click aspirationally but buy close to
    /// their budget, so click-optimal and purchase-optimal orderings
    /// genuinely differ.
    pub purchase_price_damping: T,
}

impl<T: Real> Default for ClickModelParams<T> {
    fn default() -> Self {
        ClickModelParams {
            examination_exponent: T::one(),
            relevance_sharpness: T::of(5.0),
            relevance_midpoint: T::of(0.85),
            price_damping: T::of(1.5),
            purchase_threshold: T::of(0.55),
            purchase_price_damping: T::of(4.0),
        }
    }
}

impl<T: Real> ClickModelParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.examination_exponent >= T::zero()) {
            return Err(Error::Config("examination_exponent must be >= 0".into()));
        }
        if !(self.relevance_sharpness > T::zero()) {
            return Err(Error::Config("relevance_sharpness must be > 0".into()));
        }
        if !(self.price_damping >= T::zero()) {
            return Err(Error::Config("price_damping must be >= 0".into()));
        }
        if !(self.purchase_threshold >= T::zero()) {
            return Err(Error::Config("purchase_threshold must be >= 0".into()));
        }
        if !(self.purchase_price_damping >= T::zero()) {
            return Err(Error::Config("purchase_price_damping must be >= 0".into()));
        }
        if !self.relevance_midpoint.is_finite() {
            return Err(Error::Config("relevance_midpoint must be finite".into()));
        }
        Ok(())
    }

    /// Probability that the shopper looks at rank `r` (1-based).
    pub fn examination_prob(&self, rank: usize) -> Result<T> {
        if rank == 0 {
            return Err(Error::InvalidRank(rank));
        }
        Ok(T::of(
            (rank as f64).powf(-self.examination_exponent.widen()),
        ))
    }

    /// Probability that the shopper clicks `item` once examined:
    /// a sigmoid in taste affinity, damped by log-price mismatch with
    /// the price the shopper is browsing at — their budget target
    /// shifted up by their aspiration.
    pub fn relevance_prob(&self, item: &Item<T>, intent: &UserIntent<T>) -> Result<T> {
        if item.quality.len() != intent.intent_vector.len() {
            return Err(Error::DimensionMismatch {
                expected: intent.intent_vector.len(),
                got: item.quality.len(),
            });
        }
        let affinity: T = item
            .quality
            .iter()
            .zip(&intent.intent_vector)
            .map(|(&q, &v)| q * v)
            .sum();
        let wish = intent.target_price.widen().ln() + intent.aspiration.widen();
        let mismatch = T::of((item.price.widen().ln() - wish).abs());
        let logit = self.relevance_sharpness * (affinity - self.relevance_midpoint)
            - self.price_damping * mismatch;
        Ok(sigmoid(logit))
    }

    /// Probability that a clicked item clearing the purchase threshold
    /// actually converts: the shopper's session resolve, damped by how
    /// far the item's price sits from the target budget.
    pub fn purchase_prob(&self, item: &Item<T>, intent: &UserIntent<T>) -> T {
        let mismatch =
            T::of((item.price.widen().ln() - intent.target_price.widen().ln()).abs());
        intent.purchase_resolve * (-self.purchase_price_damping * mismatch).exp()
    }
}

fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// What happened on one ordered result page.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PageOutcome {
    /// Per displayed slot, whether the shopper looked at it.
    pub examined: Vec<bool>,
    /// Per displayed slot, whether the shopper clicked it.
    pub clicked: Vec<bool>,
    /// Slot of the purchased item, if the session converted here.
    pub purchased: Option<usize>,
}

/// Runs the shopper over an already-ordered page.
///
/// Draw order is fixed: for each slot top to bottom, one examination
/// draw, then one click draw if examined. Afterwards each clicked item
/// whose click probability clears the purchase threshold gets one
/// price-damped resolve draw, in display order, stopping at the first
/// success.
pub fn simulate_page<T: Real>(
    params: &ClickModelParams<T>,
    intent: &UserIntent<T>,
    page: &[&Item<T>],
    rng: &mut impl Rng,
) -> Result<PageOutcome> {
    let mut examined = Vec::with_capacity(page.len());
    let mut clicked = Vec::with_capacity(page.len());
    let mut relevance = Vec::with_capacity(page.len());

    for (slot, item) in page.iter().enumerate() {
        let exam = params.examination_prob(slot + 1)?;
        let rel = params.relevance_prob(item, intent)?;
        relevance.push(rel);
        let saw = rng.random::<f64>() < exam.widen();
        let hit = saw && rng.random::<f64>() < rel.widen();
        examined.push(saw);
        clicked.push(hit);
    }

    let mut purchased = None;
    for slot in 0..page.len() {
        if !clicked[slot] || relevance[slot] <= params.purchase_threshold {
            continue;
        }
        if rng.random::<f64>() < params.purchase_prob(page[slot], intent).widen() {
            purchased = Some(slot);
            break;
        }
    }

    Ok(PageOutcome { examined, clicked, purchased })
}
