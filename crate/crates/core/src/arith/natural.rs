use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Rem};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

/// Exact non-negative integer.
///
/// Values up to `u128::MAX` live inline; anything larger is promoted to a
/// heap-allocated [`BigUint`]. The representation is normalized, so equality
/// and ordering never depend on which variant produced a value.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Natural(Repr);

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    Small(u128),
    Big(BigUint),
}

impl Natural {
    pub const ZERO: Natural = Natural(Repr::Small(0));
    pub const ONE: Natural = Natural(Repr::Small(1));

    fn from_big(b: BigUint) -> Self {
        match b.to_u128() {
            Some(v) => Natural(Repr::Small(v)),
            None => Natural(Repr::Big(b)),
        }
    }

    pub fn to_biguint(&self) -> BigUint {
        match &self.0 {
            Repr::Small(v) => BigUint::from(*v),
            Repr::Big(b) => b.clone(),
        }
    }

    pub fn to_u64(&self) -> Option<u64> {
        match &self.0 {
            Repr::Small(v) => u64::try_from(*v).ok(),
            Repr::Big(_) => None,
        }
    }

    pub fn to_u128(&self) -> Option<u128> {
        match &self.0 {
            Repr::Small(v) => Some(*v),
            Repr::Big(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small(v) => *v as f64,
            Repr::Big(b) => b.to_f64().unwrap_or(f64::INFINITY),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0))
    }

    pub fn is_one(&self) -> bool {
        matches!(self.0, Repr::Small(1))
    }

    /// `true` when the value is held inline rather than as a big integer.
    pub fn is_inline(&self) -> bool {
        matches!(self.0, Repr::Small(_))
    }

    pub fn checked_sub(&self, rhs: &Natural) -> Option<Natural> {
        match (&self.0, &rhs.0) {
            (Repr::Small(a), Repr::Small(b)) => a.checked_sub(*b).map(|v| Natural(Repr::Small(v))),
            _ => {
                let (a, b) = (self.to_biguint(), rhs.to_biguint());
                (a >= b).then(|| Natural::from_big(a - b))
            }
        }
    }

    pub fn pow(&self, exp: u32) -> Natural {
        let mut acc = Natural::ONE;
        for _ in 0..exp {
            acc = &acc * self;
        }
        acc
    }

    pub fn gcd(&self, other: &Natural) -> Natural {
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => Natural(Repr::Small(a.gcd(b))),
            _ => Natural::from_big(self.to_biguint().gcd(&other.to_biguint())),
        }
    }
}

impl From<u32> for Natural {
    fn from(v: u32) -> Self {
        Natural(Repr::Small(v as u128))
    }
}

impl From<u64> for Natural {
    fn from(v: u64) -> Self {
        Natural(Repr::Small(v as u128))
    }
}

impl From<u128> for Natural {
    fn from(v: u128) -> Self {
        Natural(Repr::Small(v))
    }
}

impl From<usize> for Natural {
    fn from(v: usize) -> Self {
        Natural(Repr::Small(v as u128))
    }
}

impl From<BigUint> for Natural {
    fn from(b: BigUint) -> Self {
        Natural::from_big(b)
    }
}

impl Ord for Natural {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => a.cmp(b),
            (Repr::Small(_), Repr::Big(_)) => Ordering::Less,
            (Repr::Big(_), Repr::Small(_)) => Ordering::Greater,
            (Repr::Big(a), Repr::Big(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for Natural {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &Natural {
    type Output = Natural;
    fn add(self, rhs: &Natural) -> Natural {
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &rhs.0) {
            if let Some(v) = a.checked_add(*b) {
                return Natural(Repr::Small(v));
            }
        }
        Natural::from_big(self.to_biguint() + rhs.to_biguint())
    }
}

impl Mul for &Natural {
    type Output = Natural;
    fn mul(self, rhs: &Natural) -> Natural {
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &rhs.0) {
            if let Some(v) = a.checked_mul(*b) {
                return Natural(Repr::Small(v));
            }
        }
        Natural::from_big(self.to_biguint() * rhs.to_biguint())
    }
}

impl Div for &Natural {
    type Output = Natural;
    fn div(self, rhs: &Natural) -> Natural {
        assert!(!rhs.is_zero(), "division by zero");
        match (&self.0, &rhs.0) {
            (Repr::Small(a), Repr::Small(b)) => Natural(Repr::Small(a / b)),
            _ => Natural::from_big(self.to_biguint() / rhs.to_biguint()),
        }
    }
}

impl Rem for &Natural {
    type Output = Natural;
    fn rem(self, rhs: &Natural) -> Natural {
        assert!(!rhs.is_zero(), "remainder by zero");
        match (&self.0, &rhs.0) {
            (Repr::Small(a), Repr::Small(b)) => Natural(Repr::Small(a % b)),
            _ => Natural::from_big(self.to_biguint() % rhs.to_biguint()),
        }
    }
}

macro_rules! forward_owned {
    ($($tr:ident :: $m:ident),*) => {$(
        impl $tr for Natural {
            type Output = Natural;
            fn $m(self, rhs: Natural) -> Natural {
                (&self).$m(&rhs)
            }
        }
    )*};
}
forward_owned!(Add::add, Mul::mul, Div::div, Rem::rem);

impl fmt::Display for Natural {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(v) => write!(f, "{v}"),
            Repr::Big(b) => write!(f, "{b}"),
        }
    }
}

impl fmt::Debug for Natural {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Natural({self})")
    }
}

impl Zero for Natural {
    fn zero() -> Self {
        Natural::ZERO
    }
    fn is_zero(&self) -> bool {
        Natural::is_zero(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn promotes_past_u128() {
        let max = Natural::from(u128::MAX);
        assert!(max.is_inline());
        let bigger = &max + &Natural::ONE;
        assert!(!bigger.is_inline());
        assert_eq!(bigger.to_biguint(), BigUint::from(u128::MAX) + 1u32);
        assert_eq!(bigger.checked_sub(&Natural::ONE).unwrap(), max);
        assert!(bigger.checked_sub(&Natural::ONE).unwrap().is_inline());
        assert!(max < bigger);
    }

    #[test]
    fn two_pow_127_fits_inline() {
        let v = Natural::from(2u64).pow(127);
        assert!(v.is_inline());
        assert_eq!(v.to_u128(), Some(1u128 << 127));
    }

    proptest! {
        // Results must not depend on whether intermediates overflowed u128.
        #[test]
        fn arithmetic_matches_biguint(a in any::<u128>(), b in 1u128.., c in any::<u64>()) {
            let (na, nb, nc) = (Natural::from(a), Natural::from(b), Natural::from(c));
            let expect = (BigUint::from(a) * BigUint::from(b) + BigUint::from(c)) % BigUint::from(b);
            let got = &(&(&na * &nb) + &nc) % &nb;
            prop_assert_eq!(got.to_biguint(), expect);
            prop_assert!(got.is_inline());
            let g = na.gcd(&nb);
            prop_assert_eq!(g.to_biguint(), BigUint::from(a).gcd(&BigUint::from(b)));
        }
    }
}
