use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::AddAssign;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point scalar used for masses, m/z values, intensities and scores.
///
/// `Display` must print the shortest string that parses back to the same
/// value; every text format in this crate relies on that for byte-identical
/// round-trips.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumCast
    + FromStr
    + Display
    + Debug
    + Default
    + Sum
    + AddAssign
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant, panicking only for non-representable input.
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        <f64 as NumCast>::from(self).unwrap_or(f64::NAN)
    }

    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Parses a scalar, returning `None` for malformed or non-finite text.
pub fn parse_scalar<T: Scalar>(text: &str) -> Option<T> {
    text.parse::<T>().ok().filter(|v| v.is_finite())
}
