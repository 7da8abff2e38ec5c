//! Exact modular and multiplicative number theory.
//!
//! Everything the point-set generators and the exponential sums rely on:
//! gcds and inverses, Euler's totient, distinct prime divisors, sieving,
//! monomial residue sets and their predicted sizes, and the Ramanujan and
//! Kloosterman sums.

mod factor;
mod modular;
mod natural;
mod rational;
mod sieve;

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par::{self, Exec};

pub use factor::{factorize, factorize_u64, is_prime_u64};
pub use modular::{gcd_u64, inv_mod, mod_inverse, mul_mod, pow_mod, reduce_i128, Residue};
pub use natural::Natural;
pub use rational::Rational;
pub use sieve::{primes_below, primes_coprime, small_primes, PrimeSet, SIEVE_LIMIT};

/// `gcd(0, 0) = 0`.
pub fn gcd(a: &Natural, b: &Natural) -> Natural {
    a.gcd(b)
}

/// Euler's totient `φ(n)`, `n ≥ 1`.
pub fn totient(n: &Natural) -> Natural {
    assert!(!n.is_zero(), "totient(0)");
    factorize(n).iter().fold(Natural::ONE, |acc, (p, e)| {
        let p_minus_1 = p.checked_sub(&Natural::ONE).expect("prime ≥ 2");
        &(&acc * &p.pow(e - 1)) * &p_minus_1
    })
}

pub fn totient_u64(n: u64) -> u64 {
    assert!(n >= 1, "totient(0)");
    factorize_u64(n)
        .iter()
        .fold(1, |acc, &(p, e)| acc * p.pow(e - 1) * (p - 1))
}

/// Number of distinct prime divisors.
pub fn omega(n: &Natural) -> u32 {
    assert!(!n.is_zero(), "omega(0)");
    factorize(n).len() as u32
}

pub fn omega_u64(n: u64) -> u32 {
    factorize_u64(n).len() as u32
}

/// Möbius function.
pub fn mobius(n: u64) -> i64 {
    let f = factorize_u64(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Number of divisors `τ(n)`.
pub fn divisor_count(n: u64) -> u64 {
    factorize_u64(n).iter().map(|&(_, e)| e as u64 + 1).product()
}

/// The units of `Z/nZ` in increasing order, by sieving out multiples of the
/// prime divisors of `n`.
pub fn units(n: u64) -> Vec<u64> {
    assert!(n >= 1, "units mod 0");
    if n == 1 {
        return vec![0];
    }
    let mut is_unit = vec![true; n as usize];
    for (p, _) in factorize_u64(n) {
        for m in (0..n).step_by(p as usize) {
            is_unit[m as usize] = false;
        }
    }
    (0..n).filter(|&k| is_unit[k as usize]).collect()
}

/// `{a·k^d mod n : gcd(k, n) = 1}`, ascending and deduplicated.
pub fn residue_set(n: u64, d: u64, a: Residue) -> Result<Vec<Residue>> {
    if a.modulus() != n {
        return Err(Error::InvalidArgument(format!("{a} is not a residue mod {n}")));
    }
    if !a.is_unit() {
        return Err(Error::NotCoprime {
            value: a.value() as i128,
            modulus: n,
        });
    }
    let mut seen = vec![false; n as usize];
    for k in units(n) {
        seen[mul_mod(a.value(), pow_mod(k, d, n), n) as usize] = true;
    }
    Ok(seen
        .iter()
        .enumerate()
        .filter(|(_, &s)| s)
        .map(|(r, _)| Residue::new(r as i128, n).expect("n ≥ 1"))
        .collect())
}

/// Size of the image of `k ↦ k^d` on `(Z/2^r)^×`, `r ≥ 1`.
fn power_image_two(r: u32, d: u64) -> u64 {
    if r == 1 {
        return 1;
    }
    let phi = 1u64 << (r - 1);
    let cyclic = 1u64 << (r - 2);
    if d % 2 == 0 {
        phi / (2 * gcd_u64(cyclic, d))
    } else {
        // (Z/2^r)^× ≅ Z/2 × Z/2^{r-2}; an odd d is invertible on both factors.
        (2 / gcd_u64(2, d)) * (cyclic / gcd_u64(cyclic, d))
    }
}

/// Predicted `|{k^d mod n : (k, n) = 1}|`, assembled over prime powers.
pub fn residue_count_formula(n: u64, d: u64) -> u64 {
    assert!(n >= 1 && d >= 1, "residue_count_formula needs n, d ≥ 1");
    factorize_u64(n)
        .into_iter()
        .map(|(p, r)| {
            if p == 2 {
                power_image_two(r, d)
            } else {
                let phi = p.pow(r - 1) * (p - 1);
                phi / gcd_u64(phi, d)
            }
        })
        .product()
}

/// `e(r/n) = exp(2πi r/n)` for an exact residue `r`.
#[inline]
pub fn unit_root(r: u64, n: u64) -> Complex64 {
    let (s, c) = (TAU * (r as f64 / n as f64)).sin_cos();
    Complex64::new(c, s)
}

/// Ramanujan's sum `c_n(m)` in closed form `μ(n/g)·φ(n)/φ(n/g)`, `g = gcd(m, n)`.
pub fn ramanujan_sum(n: u64, m: i64) -> i64 {
    assert!(n >= 1, "ramanujan_sum needs n ≥ 1");
    let g = gcd_u64(m.unsigned_abs(), n);
    let q = n / g;
    mobius(q) * (totient_u64(n) / totient_u64(q)) as i64
}

/// `S(m1, m2; n) = Σ_{(k,n)=1} e((m1·k + m2·k̄)/n)`, summed pairwise.
pub fn kloosterman_sum(m1: i64, m2: i64, n: u64) -> Complex64 {
    kloosterman_sum_with(Exec::default(), m1, m2, n)
}

pub fn kloosterman_sum_with(exec: Exec, m1: i64, m2: i64, n: u64) -> Complex64 {
    assert!(n >= 1, "kloosterman_sum needs n ≥ 1");
    let us = units(n);
    let (a, b) = (reduce_i128(m1 as i128, n), reduce_i128(m2 as i128, n));
    par::sum_slice(exec, &us, |&k| {
        let kbar = inv_mod(k, n).expect("unit");
        let r = ((a as u128 * k as u128 + b as u128 * kbar as u128) % n as u128) as u64;
        unit_root(r, n)
    })
}

/// `τ(n)·√gcd(m1, m2, n)·√n`.
pub fn weil_bound(m1: i64, m2: i64, n: u64) -> f64 {
    let g = gcd_u64(gcd_u64(m1.unsigned_abs(), m2.unsigned_abs()), n);
    divisor_count(n) as f64 * (g as f64).sqrt() * (n as f64).sqrt()
}
