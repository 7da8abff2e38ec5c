use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact reduced fraction with positive denominator.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rational(Ratio<i128>);

impl Rational {
    pub fn new(numer: i128, denom: i128) -> Result<Self> {
        if denom == 0 {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        Ok(Rational(Ratio::new(numer, denom)))
    }

    pub fn integer(v: i128) -> Self {
        Rational(Ratio::from_integer(v))
    }

    pub fn zero() -> Self {
        Rational::integer(0)
    }

    pub fn numer(&self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i128 {
        *self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Representative of `self + mZ` in `[0, m)`; `m` must be positive.
    pub fn rem_euclid(&self, m: i128) -> Rational {
        assert!(m > 0, "modulus must be positive");
        let (p, q) = (self.numer(), self.denom());
        Rational(Ratio::new(p.rem_euclid(m * q), q))
    }

    /// Torus coordinate: representative of `self + Z` in `[0, 1)`.
    pub fn frac(&self) -> Rational {
        self.rem_euclid(1)
    }

    pub fn recip(&self) -> Result<Rational> {
        if self.is_zero() {
            return Err(Error::InvalidArgument("reciprocal of zero".into()));
        }
        Ok(Rational(self.0.recip()))
    }
}

impl Add for Rational {
    type Output = Rational;
    fn add(self, rhs: Rational) -> Rational {
        Rational(self.0 + rhs.0)
    }
}

impl Sub for Rational {
    type Output = Rational;
    fn sub(self, rhs: Rational) -> Rational {
        Rational(self.0 - rhs.0)
    }
}

impl Mul for Rational {
    type Output = Rational;
    fn mul(self, rhs: Rational) -> Rational {
        Rational(self.0 * rhs.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl From<i64> for Rational {
    fn from(v: i64) -> Self {
        Rational::integer(v as i128)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("not a rational: {s:?}"));
        let s = s.trim();
        match s.split_once('/') {
            Some((p, q)) => {
                let p = p.trim().parse().map_err(|_| bad())?;
                let q = q.trim().parse().map_err(|_| bad())?;
                Rational::new(p, q)
            }
            None => s.parse().map(Rational::integer).map_err(|_| bad()),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
