//! Scalar abstraction for the numeric core.
//!
//! Everything numeric in this crate is generic over [`Real`] so a pipeline
//! can run in `f32` (memory-bound training sets) or `f64` (the default used
//! by the CLI and all shipped artifacts). The trait is sealed by its bounds
//! rather than by a private module: any IEEE float with serde support
//! qualifies, and in practice that means exactly `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar used throughout the library.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    ///
    /// Conversions from literals and from `f64` intermediates (RNG draws,
    /// bootstrap quantiles) are infallible for any IEEE type, so this
    /// unwraps rather than propagating an impossible error.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant must convert into Real scalar")
    }

    /// Converts a count into this scalar type.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::of(n as f64)
    }

    /// Widens this scalar to `f64` for reporting and serialization.
    #[inline]
    fn widen(self) -> f64 {
        self.to_f64().expect("Real scalar must widen to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn of_round_trips_constants() {
        assert_eq!(f64::of(0.25), 0.25);
        assert_eq!(f32::of(0.25), 0.25f32);
        assert_eq!(f64::of_usize(7), 7.0);
    }

    #[test]
    fn widen_is_exact_for_f32_values() {
        let x = f32::of(1.5);
        assert_eq!(x.widen(), 1.5);
    }
}
