//! Exact rational numbers for thresholds, exposures and certificate bounds.
//!
//! Exposure is defined with a strict inequality `p(v) < t`, so ties between a
//! probability level and a (possibly composed) threshold must be decided
//! exactly. Every `f64` that enters here is converted without rounding.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn ratio(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(invalid("den", "zero denominator"));
        }
        Ok(Rational(BigRational::new(num.into(), den.into())))
    }

    pub fn from_integer(v: u64) -> Self {
        Rational(BigRational::from_integer(v.into()))
    }

    /// Exact conversion; fails on NaN and infinities.
    pub fn from_f64(x: f64) -> Result<Self> {
        BigRational::from_float(x)
            .map(Rational)
            .ok_or_else(|| invalid("value", format!("{x} is not finite")))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_probability(&self) -> bool {
        !self.0.is_negative() && self.0 <= BigRational::one()
    }

    pub fn recip(&self) -> Option<Self> {
        if self.0.is_zero() {
            None
        } else {
            Some(Rational(self.0.recip()))
        }
    }

    /// Integer value if the denominator is one.
    pub fn to_integer(&self) -> Option<u64> {
        if self.0.is_integer() {
            self.0.to_integer().to_u64()
        } else {
            None
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// `count / total < self`, decided by cross multiplication.
    pub fn exceeds_fraction(&self, count: u64, total: u64) -> bool {
        let lhs = BigInt::from(count) * self.0.denom();
        let rhs = self.0.numer() * BigInt::from(total);
        lhs < rhs
    }

    /// `mass < self` for an f64 mass, exactly.
    pub fn exceeds_f64(&self, mass: f64) -> bool {
        match BigRational::from_float(mass) {
            Some(m) => m < self.0,
            None => false,
        }
    }

    pub fn product<'a>(items: impl IntoIterator<Item = &'a Rational>) -> Rational {
        items
            .into_iter()
            .fold(Rational::one(), |acc, r| Rational(acc.0 * &r.0))
    }

    pub fn midpoint(&self, other: &Rational) -> Rational {
        Rational((&self.0 + &other.0) / BigRational::from_integer(2.into()))
    }
}

impl<'a> Add<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn add(self, rhs: &'a Rational) -> Rational {
        Rational(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn sub(self, rhs: &'a Rational) -> Rational {
        Rational(&self.0 - &rhs.0)
    }
}

impl<'a> Mul<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn mul(self, rhs: &'a Rational) -> Rational {
        Rational(&self.0 * &rhs.0)
    }
}

impl From<BigRational> for Rational {
    fn from(v: BigRational) -> Self {
        Rational(v)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Rational {
    type Err = crate::Error;

    /// Accepts `a/b`, an integer, or a decimal float (converted exactly).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n
                .trim()
                .parse()
                .map_err(|_| invalid("rational", format!("bad numerator in {s:?}")))?;
            let d: BigInt = d
                .trim()
                .parse()
                .map_err(|_| invalid("rational", format!("bad denominator in {s:?}")))?;
            if d.is_zero() {
                return Err(invalid("rational", "zero denominator"));
            }
            return Ok(Rational(BigRational::new(n, d)));
        }
        if let Ok(i) = s.parse::<BigInt>() {
            return Ok(Rational(BigRational::from_integer(i)));
        }
        let x: f64 = s
            .parse()
            .map_err(|_| invalid("rational", format!("cannot parse {s:?}")))?;
        Rational::from_f64(x)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Number(f64),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Number(x) => Rational::from_f64(x).map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_conversion_is_exact() {
        let r = Rational::from_f64(0.1).unwrap();
        assert_ne!(r, Rational::ratio(1, 10).unwrap());
        assert_eq!(r.to_f64(), 0.1);
    }

    #[test]
    fn fraction_comparison_is_strict() {
        let t = Rational::ratio(2, 5).unwrap();
        assert!(!t.exceeds_fraction(4, 10));
        assert!(t.exceeds_fraction(3, 10));
    }

    #[test]
    fn parse_and_display() {
        let r: Rational = "6/8".parse().unwrap();
        assert_eq!(r.to_string(), "3/4");
        let r: Rational = "5".parse().unwrap();
        assert_eq!(r.to_integer(), Some(5));
        let r: Rational = "0.25".parse().unwrap();
        assert_eq!(r, Rational::ratio(1, 4).unwrap());
        assert!("1/0".parse::<Rational>().is_err());
    }

    #[test]
    fn serde_accepts_numbers_and_strings() {
        let a: Rational = serde_json::from_str("\"1/3\"").unwrap();
        let b: Rational = serde_json::from_str("0.5").unwrap();
        assert_eq!(a, Rational::ratio(1, 3).unwrap());
        assert_eq!(b, Rational::ratio(1, 2).unwrap());
        assert_eq!(serde_json::to_string(&a).unwrap(), "\"1/3\"");
    }
}
