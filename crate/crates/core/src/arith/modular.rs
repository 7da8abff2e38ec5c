//! Word-sized modular arithmetic. Products go through `u128`, so any modulus
//! below `2^64` is safe.

use std::fmt;

use crate::error::{Error, Result};

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[inline]
pub fn mul_mod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

pub fn pow_mod(base: u64, mut exp: u64, n: u64) -> u64 {
    if n == 1 {
        return 0;
    }
    let mut acc = 1u64;
    let mut b = base % n;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, b, n);
        }
        b = mul_mod(b, b, n);
        exp >>= 1;
    }
    acc
}

/// Reduces an arbitrary integer into `[0, n)`.
#[inline]
pub fn reduce_i128(v: i128, n: u64) -> u64 {
    v.rem_euclid(n as i128) as u64
}

/// Modular inverse in `[0, n)` by the extended Euclidean algorithm.
pub fn inv_mod(k: u64, n: u64) -> Option<u64> {
    if n == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (n as i128, (k % n) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    (r0 == 1).then(|| reduce_i128(t0, n))
}

/// An element of `Z/nZ`, `n ≥ 1`, stored by its canonical representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Residue {
    value: u64,
    modulus: u64,
}

impl Residue {
    pub fn new(value: i128, modulus: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::InvalidArgument("modulus must be at least 1".into()));
        }
        Ok(Residue {
            value: reduce_i128(value, modulus),
            modulus,
        })
    }

    pub fn value(self) -> u64 {
        self.value
    }

    pub fn modulus(self) -> u64 {
        self.modulus
    }

    pub fn is_unit(self) -> bool {
        gcd_u64(self.value, self.modulus) == 1
    }

    fn check(self, rhs: Residue) {
        assert_eq!(self.modulus, rhs.modulus, "residues with different moduli");
    }

    pub fn mul(self, rhs: Residue) -> Residue {
        self.check(rhs);
        Residue {
            value: mul_mod(self.value, rhs.value, self.modulus),
            modulus: self.modulus,
        }
    }

    pub fn add(self, rhs: Residue) -> Residue {
        self.check(rhs);
        Residue {
            value: ((self.value as u128 + rhs.value as u128) % self.modulus as u128) as u64,
            modulus: self.modulus,
        }
    }

    pub fn pow(self, exp: u64) -> Residue {
        Residue {
            value: pow_mod(self.value, exp, self.modulus),
            modulus: self.modulus,
        }
    }

    pub fn inverse(self) -> Result<Residue> {
        inv_mod(self.value, self.modulus)
            .map(|value| Residue {
                value,
                modulus: self.modulus,
            })
            .ok_or(Error::NotCoprime {
                value: self.value as i128,
                modulus: self.modulus,
            })
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.value, self.modulus)
    }
}

/// `k̄` with `k·k̄ ≡ 1 (mod n)`.
pub fn mod_inverse(k: Residue) -> Result<Residue> {
    k.inverse()
}
