//! Learning and evaluation of marketplace ranking policies from logged
//! search sessions.
//!
//! The crate covers the full loop:
//!
//! 1. [`sim`] — a synthetic marketplace that generates session logs with a
//!    known position-biased click model and purchase funnel, plus paired
//!    online A/B tests against the same simulated traffic.
//! 2. [`logs`] — the session-log schema, JSONL persistence, and the
//!    assembly of per-query training and evaluation contexts.
//! 3. [`reward`] — reward specifications that turn raw sessions into
//!    weighted, debiased learning signals: rank discounts and examination
//!    curves, attribution of session outcomes to queries, monetary value
//!    bucketing, and clipped self-normalized context weights.
//! 4. [`policy`] — linear and one-hidden-layer scoring functions, pairwise
//!    swap-delta training toward an expected-reward objective, a pointwise
//!    baseline, and score-space mixing of two trained scorers.
//! 5. [`eval`] — offline counterfactual estimates with bootstrap intervals,
//!    per-segment lifts, and mixing-weight sweeps.
//!
//! All numeric code is generic over the scalar type via [`Real`]; the
//! aliases at the crate root fix `f64`, which is what the CLI uses.

pub mod error;
pub mod eval;
pub mod logs;
pub mod policy;
pub mod num;
pub mod reward;
pub mod rng;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use num::Real;

/// `f64` specializations of the types that cross module boundaries most.
pub type SimConfig64 = sim::SimConfig<f64>;
pub type ItemCatalog64 = sim::ItemCatalog<f64>;
pub type SessionRecord64 = logs::SessionRecord<f64>;
pub type Dataset64 = logs::Dataset<f64>;
pub type RewardSpec64 = reward::RewardSpec<f64>;
pub type Policy64 = policy::Policy<f64>;
pub type ScoringFunction64 = policy::ScoringFunction<f64>;
pub type TrainConfig64 = policy::TrainConfig<f64>;
pub type SweepCurve64 = eval::SweepCurve<f64>;
