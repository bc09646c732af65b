//! Floating-point abstraction used throughout the toolkit.
//!
//! Every numerical routine is generic over [`Scalar`], which is implemented
//! for `f32` and `f64`. Concrete aliases for the common types live at the
//! crate root.

use std::fmt::Display;
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Real scalar type for signals, spectra, and solver state.
///
/// The bounds cover ordinary arithmetic (`Float`, `NumAssign`, `Sum`),
/// mathematical constants (`FloatConst`), conversions to and from `f64`,
/// and compatibility with the FFT backend (`FftNum`).
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Sum + Display + FftNum
{
    /// Convert an `f64` constant into this type, panicking only for values
    /// that cannot be represented at all (never the case for finite inputs).
    fn cast(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 must convert to scalar")
    }

    /// Widen to `f64` for reporting, serialization, and seed-independent
    /// bookkeeping.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar must convert to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
