use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::{parse_scalar, Scalar};

/// Probability used for a (parent, child) pair with no observed edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothingConfig<T: Scalar = f64> {
    /// Constant probability in (0, 1).
    FixedFloor(T),
    /// `m * prior / (child_total + m)`: the m-estimate with zero edge count.
    MEstimate { m: T, prior: T },
}

impl<T: Scalar> Default for SmoothingConfig<T> {
    fn default() -> Self {
        SmoothingConfig::FixedFloor(T::lit(0.1))
    }
}

impl<T: Scalar> SmoothingConfig<T> {
    pub fn floor(value: T) -> Result<Self> {
        if !(value > T::zero() && value < T::one()) {
            return Err(Error::Config(format!("smoothing floor {value} must lie in (0, 1)")));
        }
        Ok(SmoothingConfig::FixedFloor(value))
    }

    pub fn m_estimate(m: T, prior: T) -> Result<Self> {
        if !(m > T::zero() && m.is_finite()) || !(prior > T::zero() && prior <= T::one()) {
            return Err(Error::Config(format!("m-estimate needs m > 0 and prior in (0, 1], got m={m} p={prior}")));
        }
        Ok(SmoothingConfig::MEstimate { m, prior })
    }

    /// Smoothed probability for an absent edge into a child with the given
    /// incoming total.
    pub fn absent(&self, child_total: T) -> T {
        match *self {
            SmoothingConfig::FixedFloor(p) => p,
            SmoothingConfig::MEstimate { m, prior } => m * prior / (child_total + m),
        }
    }
}

impl<T: Scalar> fmt::Display for SmoothingConfig<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SmoothingConfig::FixedFloor(p) => write!(f, "floor {p}"),
            SmoothingConfig::MEstimate { m, prior } => write!(f, "m-estimate m={m} p={prior}"),
        }
    }
}

/// Parses `floor 0.1` or `m-estimate m=2 p=0.05`.
impl<T: Scalar> FromStr for SmoothingConfig<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad smoothing `{s}`; expected `floor <p>` or `m-estimate m=<m> p=<p>`"));
        let mut words = s.split_whitespace();
        match words.next() {
            Some("floor") => {
                let value = words.next().and_then(parse_scalar).ok_or_else(bad)?;
                if words.next().is_some() {
                    return Err(bad());
                }
                Self::floor(value)
            }
            Some("m-estimate") => {
                let (mut m, mut prior) = (None, None);
                for w in words {
                    match w.split_once('=') {
                        Some(("m", v)) => m = parse_scalar(v),
                        Some(("p", v)) => prior = parse_scalar(v),
                        _ => return Err(bad()),
                    }
                }
                Self::m_estimate(m.ok_or_else(bad)?, prior.ok_or_else(bad)?)
            }
            _ => Err(bad()),
        }
    }
}
