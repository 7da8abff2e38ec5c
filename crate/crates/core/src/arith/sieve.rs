use std::sync::OnceLock;

use serde::Serialize;

use super::modular::gcd_u64;

/// Primes below this bound are sieved once and shared.
pub const SIEVE_LIMIT: u64 = 1_000_000;

static SMALL_PRIMES: OnceLock<Vec<u64>> = OnceLock::new();

fn eratosthenes(limit: u64) -> Vec<u64> {
    let limit = limit as usize;
    if limit < 3 {
        return Vec::new();
    }
    let mut composite = vec![false; limit];
    let mut out = Vec::new();
    for i in 2..limit {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j < limit {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// All primes `< SIEVE_LIMIT`, computed on first use.
pub fn small_primes() -> &'static [u64] {
    SMALL_PRIMES.get_or_init(|| eratosthenes(SIEVE_LIMIT))
}

/// All primes `p < limit`, ascending.
///
/// Uses the shared table below [`SIEVE_LIMIT`] and a segmented sieve above.
pub fn primes_below(limit: u64) -> Vec<u64> {
    let table = small_primes();
    if limit <= SIEVE_LIMIT {
        let end = table.partition_point(|&p| p < limit);
        return table[..end].to_vec();
    }
    let mut out = table.to_vec();
    let base = primes_below((limit as f64).sqrt() as u64 + 2);
    const SEGMENT: u64 = 1 << 18;
    let mut lo = SIEVE_LIMIT;
    while lo < limit {
        let hi = (lo + SEGMENT).min(limit);
        let mut composite = vec![false; (hi - lo) as usize];
        for &p in &base {
            if p * p >= hi {
                break;
            }
            let mut m = lo.div_ceil(p).max(p) * p;
            while m < hi {
                composite[(m - lo) as usize] = true;
                m += p;
            }
        }
        out.extend(
            composite
                .iter()
                .enumerate()
                .filter(|(_, &c)| !c)
                .map(|(i, _)| lo + i as u64),
        );
        lo = hi;
    }
    out
}

/// The primes `p` with `1 < p < x` and `gcd(p, n) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimeSet {
    pub modulus_n: u64,
    pub cutoff_x: f64,
    pub primes: Vec<u64>,
}

impl PrimeSet {
    /// `π_n(x)`.
    pub fn count(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }
}

pub fn primes_coprime(n: u64, x: f64) -> PrimeSet {
    let limit = if x.is_finite() && x > 2.0 { x.ceil() as u64 } else { 0 };
    let primes = primes_below(limit)
        .into_iter()
        .filter(|&p| (p as f64) < x && gcd_u64(p, n) == 1)
        .collect();
    PrimeSet {
        modulus_n: n,
        cutoff_x: x,
        primes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_prime_naive(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    #[test]
    fn table_is_correct_prefix() {
        let naive: Vec<u64> = (0..5000).filter(|&n| is_prime_naive(n)).collect();
        assert_eq!(primes_below(5000), naive);
        assert_eq!(small_primes().len(), 78_498);
    }

    #[test]
    fn segmented_extension() {
        let above = primes_below(SIEVE_LIMIT + 5_000);
        let tail: Vec<u64> = above.into_iter().filter(|&p| p >= SIEVE_LIMIT - 100).collect();
        let naive: Vec<u64> = (SIEVE_LIMIT - 100..SIEVE_LIMIT + 5_000)
            .filter(|&n| is_prime_naive(n))
            .collect();
        assert_eq!(tail, naive);
    }

    #[test]
    fn coprime_examples() {
        assert_eq!(primes_coprime(6, 10.0).primes, vec![5, 7]);
        assert_eq!(primes_coprime(1, 10.0).primes, vec![2, 3, 5, 7]);
        for n in [1, 2, 30, 1009] {
            assert!(primes_coprime(n, 2.0).is_empty());
        }
        assert_eq!(primes_coprime(100, 100f64.powf(0.4)).primes, vec![3]);
        // strict upper bound
        assert_eq!(primes_coprime(1, 7.0).primes, vec![2, 3, 5]);
        assert_eq!(primes_coprime(1, 7.0001).primes, vec![2, 3, 5, 7]);
    }
}
