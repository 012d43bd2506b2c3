//! Probabilities that are either exact rationals or doubles.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A probability. `"3/10"` parses to the exact variant, `"0.3"` to a double.
#[derive(Debug, Clone, PartialEq)]
pub enum Probability {
    Exact(BigRational),
    Float(f64),
}

impl Probability {
    pub fn exact(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidProbability(format!("{num}/{den}")));
        }
        Self::from_rational(BigRational::new(num.into(), den.into()))
    }

    pub fn from_rational(r: BigRational) -> Result<Self> {
        if r.is_negative() || r > BigRational::one() {
            return Err(Error::InvalidProbability(r.to_string()));
        }
        Ok(Probability::Exact(r))
    }

    pub fn from_f64(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p.to_string()));
        }
        Ok(Probability::Float(p))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Probability::Exact(r) => rational_to_f64(r),
            Probability::Float(p) => *p,
        }
    }

    /// The exact value of the probability; doubles are dyadic rationals.
    pub fn to_rational(&self) -> BigRational {
        match self {
            Probability::Exact(r) => r.clone(),
            Probability::Float(p) => BigRational::from_float(*p).expect("finite probability"),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Probability::Exact(_))
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Probability::Exact(r) => write!(f, "{}", format_rational(r)),
            Probability::Float(p) => write!(f, "{p}"),
        }
    }
}

impl FromStr for Probability {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidProbability(s.to_string());
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Probability::from_rational(BigRational::new(n, d))
        } else {
            let p: f64 = s.parse().map_err(|_| bad())?;
            if !p.is_finite() {
                return Err(bad());
            }
            Probability::from_f64(p)
        }
    }
}

/// `num/den`, with integers printed without a denominator.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Correctly rounded for the magnitudes that occur here.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Fall back to scaling when numerator and denominator overflow a double.
    let bits = r.numer().bits() as i64 - r.denom().bits() as i64;
    let shift = 60 - bits;
    let scaled = if shift >= 0 {
        (r.numer() << shift as usize) / r.denom()
    } else {
        r.numer() / (r.denom() << (-shift) as usize)
    };
    scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-shift as i32)
}

/// Serialization helper: `"num/den"` strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RationalString(pub String);

impl From<&BigRational> for RationalString {
    fn from(r: &BigRational) -> Self {
        RationalString(format_rational(r))
    }
}
