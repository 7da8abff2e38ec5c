//! Integer factorization: trial division by the shared prime table, then
//! Miller-Rabin and Pollard's rho (Brent's variant) for what remains.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::modular::{gcd_u64, mul_mod, pow_mod};
use super::natural::Natural;
use super::sieve::{small_primes, SIEVE_LIMIT};

const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic for every `u64`.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &MR_BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &MR_BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn rho_u64(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    for c in 1u64.. {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut g) = (2u64, 2u64, 1u64);
        while g == 1 {
            x = f(x);
            y = f(f(y));
            g = gcd_u64(x.abs_diff(y), n);
        }
        if g != n {
            return g;
        }
    }
    unreachable!()
}

fn push_factor<T: PartialEq>(out: &mut Vec<(T, u32)>, p: T) {
    match out.iter_mut().find(|(q, _)| *q == p) {
        Some((_, e)) => *e += 1,
        None => out.push((p, 1)),
    }
}

fn split_u64(n: u64, out: &mut Vec<(u64, u32)>) {
    if n == 1 {
        return;
    }
    if is_prime_u64(n) {
        push_factor(out, n);
        return;
    }
    let d = rho_u64(n);
    split_u64(d, out);
    split_u64(n / d, out);
}

/// Prime factorization `[(p, e)]` with ascending `p`. `factorize_u64(1)` is empty.
pub fn factorize_u64(mut n: u64) -> Vec<(u64, u32)> {
    assert!(n >= 1, "factorize_u64(0)");
    let mut out = Vec::new();
    for &p in small_primes() {
        if p * p > n {
            break;
        }
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    if n > 1 {
        if n < SIEVE_LIMIT * SIEVE_LIMIT {
            out.push((n, 1));
        } else {
            split_u64(n, &mut out);
        }
    }
    out.sort_unstable();
    out
}

fn is_probable_prime_big(n: &BigUint) -> bool {
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    let n_minus_1 = n - &one;
    let mut d = n_minus_1.clone();
    let mut s = 0u32;
    while d.is_even() {
        d >>= 1;
        s += 1;
    }
    'witness: for &a in &MR_BASES {
        let a = BigUint::from(a);
        if &a % n == BigUint::zero() {
            continue;
        }
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn rho_big(n: &BigUint) -> BigUint {
    if n.is_even() {
        return BigUint::from(2u32);
    }
    let mut c = BigUint::one();
    loop {
        let f = |x: &BigUint| (x * x + &c) % n;
        let (mut x, mut y) = (BigUint::from(2u32), BigUint::from(2u32));
        let mut g = BigUint::one();
        while g.is_one() {
            x = f(&x);
            y = f(&f(&y));
            let diff = if x > y { &x - &y } else { &y - &x };
            g = diff.gcd(n);
        }
        if &g != n {
            return g;
        }
        c += 1u32;
    }
}

fn split_big(n: BigUint, out: &mut Vec<(Natural, u32)>) {
    if n.is_one() {
        return;
    }
    if let Some(small) = n.to_u64() {
        for (p, e) in factorize_u64(small) {
            for _ in 0..e {
                push_factor(out, Natural::from(p));
            }
        }
        return;
    }
    if is_probable_prime_big(&n) {
        push_factor(out, Natural::from(n));
        return;
    }
    let d = rho_big(&n);
    let rest = &n / &d;
    split_big(d, out);
    split_big(rest, out);
}

/// Prime factorization of an arbitrary [`Natural`].
///
/// Above `2^64` primality is decided by Miller-Rabin with the first twelve
/// prime bases, which is proven correct below `3.3·10^24` and probabilistic
/// beyond.
pub fn factorize(n: &Natural) -> Vec<(Natural, u32)> {
    assert!(!n.is_zero(), "factorize(0)");
    if let Some(small) = n.to_u64() {
        return factorize_u64(small)
            .into_iter()
            .map(|(p, e)| (Natural::from(p), e))
            .collect();
    }
    let mut big = n.to_biguint();
    let mut out = Vec::new();
    for &p in small_primes() {
        let pb = BigUint::from(p);
        if (&big % &pb).is_zero() {
            let mut e = 0;
            while (&big % &pb).is_zero() {
                big /= &pb;
                e += 1;
            }
            out.push((Natural::from(p), e));
        }
        if big.is_one() {
            break;
        }
    }
    split_big(big, &mut out);
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn multiply_back(f: &[(u64, u32)]) -> u64 {
        f.iter().map(|&(p, e)| p.pow(e)).product()
    }

    #[test]
    fn small_factorizations() {
        assert!(factorize_u64(1).is_empty());
        assert_eq!(factorize_u64(12), vec![(2, 2), (3, 1)]);
        assert_eq!(factorize_u64(30030), vec![(2, 1), (3, 1), (5, 1), (7, 1), (11, 1), (13, 1)]);
        for n in 1..20_000u64 {
            let f = factorize_u64(n);
            assert_eq!(multiply_back(&f), n);
            assert!(f.iter().all(|&(p, _)| is_prime_u64(p)));
        }
    }

    #[test]
    fn large_semiprimes_use_rho() {
        let p = 1_000_000_007u64;
        let q = 998_244_353u64;
        assert_eq!(factorize_u64(p * q), vec![(q, 1), (p, 1)]);
        let m = 4_294_967_291u64; // largest prime below 2^32
        assert_eq!(factorize_u64(m * m), vec![(m, 2)]);
    }

    #[test]
    fn beyond_u64() {
        let p = Natural::from(18_446_744_073_709_551_557u64); // largest prime below 2^64
        let q = Natural::from(1_000_000_007u64);
        let n = &(&p * &q) * &Natural::from(4u64);
        let f = factorize(&n);
        assert_eq!(f, vec![(Natural::from(2u64), 2), (q, 1), (p, 1)]);
        let huge = &Natural::from(u128::MAX) + &Natural::ONE; // 2^128
        assert_eq!(factorize(&huge), vec![(Natural::from(2u64), 128)]);
    }

    #[test]
    fn primality() {
        let naive = |n: u64| n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0);
        for n in 0..10_000 {
            assert_eq!(is_prime_u64(n), naive(n), "{n}");
        }
        assert!(is_prime_u64(1_000_003));
        assert!(!is_prime_u64(3_215_031_751)); // strong pseudoprime to bases 2,3,5,7
    }
}
