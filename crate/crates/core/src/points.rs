//! Rational point sets on expanding horocycles.
//!
//! Three families share one sample type:
//!
//! * `Full`: `(k/n, Γ u_{k/n} a_{n^α}⁻¹)` for `0 ≤ k < n`, or only units when
//!   `primitive` is set;
//! * `Monomial`: `(a k^d/n, Γ u_{b k^d/n} a_{n^α}⁻¹)` over units `k`;
//! * `Triple`: `(a k^d/n, b (k^d)⁻¹/n, Γ u_{c k^d/n} a_{√n}⁻¹)` over units `k`.
//!
//! Every coordinate of a sample is a function of the residue `r = k^d mod n`
//! (`r = k` for the full family), so sets are keyed and deduplicated on `r`
//! and stored in ascending `r` order.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::{gcd_u64, inv_mod, mul_mod, pow_mod, reduce_i128, units, Rational, Residue};
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::sl2::{reduce_rational, FramedPoint, ReducedPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Full,
    Monomial,
    Triple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSetSpec {
    pub family: Family,
    pub n: u64,
    pub alpha: Rational,
    pub d: u64,
    pub a: i64,
    pub b: i64,
    pub c: i64,
    /// Restrict the full family to units.
    pub primitive: bool,
    /// Lets triples use `alpha` instead of the fixed `1/2`.
    #[serde(default)]
    pub free_alpha: bool,
}

impl PointSetSpec {
    pub fn full(n: u64, alpha: Rational) -> Self {
        PointSetSpec {
            family: Family::Full,
            n,
            alpha,
            d: 1,
            a: 1,
            b: 1,
            c: 1,
            primitive: false,
            free_alpha: false,
        }
    }

    pub fn primitive(n: u64, alpha: Rational) -> Self {
        PointSetSpec { primitive: true, ..PointSetSpec::full(n, alpha) }
    }

    pub fn monomial(n: u64, d: u64, a: i64, b: i64) -> Self {
        PointSetSpec {
            family: Family::Monomial,
            d,
            a,
            b,
            primitive: true,
            ..PointSetSpec::full(n, half())
        }
    }

    pub fn triple(n: u64, d: u64, a: i64, b: i64, c: i64) -> Self {
        PointSetSpec {
            family: Family::Triple,
            d,
            a,
            b,
            c,
            primitive: true,
            ..PointSetSpec::full(n, half())
        }
    }

    pub fn with_alpha(mut self, alpha: Rational) -> Self {
        self.alpha = alpha;
        self
    }

    /// The scaling exponent actually used.
    pub fn effective_alpha(&self) -> Rational {
        if self.family == Family::Triple && !self.free_alpha {
            half()
        } else {
            self.alpha
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if self.d == 0 {
            return Err(Error::InvalidArgument("d must be at least 1".into()));
        }
        if self.alpha.is_negative() {
            return Err(Error::InvalidArgument(format!("alpha = {} is negative", self.alpha)));
        }
        let used: &[i64] = match self.family {
            Family::Full => &[],
            Family::Monomial => &[self.a, self.b],
            Family::Triple => &[self.a, self.b, self.c],
        };
        for &v in used {
            if gcd_u64(v.unsigned_abs(), self.n) != 1 {
                return Err(Error::NotCoprime { value: v as i128, modulus: self.n });
            }
        }
        height_scale(self.n, self.effective_alpha()).map(|_| ())
    }

    /// Builds the sample with key residue `r`.
    pub fn sample(&self, r: u64) -> Result<HorocycleSample> {
        let n = self.n;
        let y = height_scale(n, self.effective_alpha())?;
        let coord = |mult: i64, v: u64| {
            let num = mul_mod(reduce_i128(mult as i128, n), v, n);
            Rational::new(num as i128, n as i128).expect("n ≥ 1")
        };
        let (torus1, torus2, horo) = match self.family {
            Family::Full => (coord(1, r), None, coord(1, r)),
            Family::Monomial => (coord(self.a, r), None, coord(self.b, r)),
            Family::Triple => {
                let rbar = inv_mod(r, n).ok_or(Error::NotCoprime { value: r as i128, modulus: n })?;
                (coord(self.a, r), Some(coord(self.b, rbar)), coord(self.c, r))
            }
        };
        Ok(HorocycleSample {
            residue: Residue::new(r as i128, n)?,
            torus1,
            torus2,
            horo,
            y,
            xpoint: FramedPoint { z: Complex64::new(horo.to_f64(), y), theta: 0.0 },
        })
    }
}

fn half() -> Rational {
    Rational::new(1, 2).expect("nonzero denominator")
}

/// `n^{-2α}`, the imaginary part of every point at level `n`.
pub fn height_scale(n: u64, alpha: Rational) -> Result<f64> {
    let y = if alpha == half() {
        1.0 / n as f64
    } else {
        (-2.0 * alpha.to_f64() * (n as f64).ln()).exp()
    };
    if !(y >= f64::MIN_POSITIVE) || !y.is_finite() {
        return Err(Error::NumericalDegeneracy(format!("n^(-2α) = {y} for n = {n}, α = {alpha}")));
    }
    Ok(y)
}

/// One element of a point set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HorocycleSample {
    /// Key residue: `k` for the full family, `k^d mod n` otherwise.
    pub residue: Residue,
    pub torus1: Rational,
    pub torus2: Option<Rational>,
    /// Horocycle parameter of the surface point, in `[0, 1)`.
    pub horo: Rational,
    /// `n^{-2α}`.
    pub y: f64,
    pub xpoint: FramedPoint,
}

impl HorocycleSample {
    pub fn reduced(&self) -> Result<ReducedPoint> {
        reduce_rational(self.horo, self.y)
    }

    pub fn height(&self) -> Result<f64> {
        Ok(self.reduced()?.height)
    }

    /// Exact coordinates as numerators over the common denominator `n`.
    pub fn key(&self) -> (u64, Option<u64>, u64) {
        let n = self.residue.modulus() as i128;
        let num = |q: Rational| (q.numer() * (n / q.denom())) as u64;
        (num(self.torus1), self.torus2.map(num), num(self.horo))
    }
}

/// Distinct key residues of a spec, ascending.
pub fn residues(spec: &PointSetSpec, exec: Exec) -> Result<Vec<u64>> {
    spec.validate()?;
    let n = spec.n;
    match (spec.family, spec.primitive) {
        (Family::Full, false) => Ok((0..n).collect()),
        (Family::Full, true) => Ok(units(n)),
        _ => {
            let us = units(n);
            let powers = par::map_slice(exec, &us, |&k| pow_mod(k, spec.d, n));
            let mut seen = vec![false; n as usize];
            for r in powers {
                seen[r as usize] = true;
            }
            Ok((0..n).filter(|&r| seen[r as usize]).collect())
        }
    }
}

pub fn generate(spec: &PointSetSpec) -> Result<Vec<HorocycleSample>> {
    generate_with(spec, Exec::default())
}

pub fn generate_with(spec: &PointSetSpec, exec: Exec) -> Result<Vec<HorocycleSample>> {
    let rs = residues(spec, exec)?;
    par::map_slice(exec, &rs, |&r| spec.sample(r)).into_iter().collect()
}

/// `P(n)_α`: all `n` rational points, ordered by `k`.
pub fn gen_full(n: u64, alpha: Rational) -> Result<Vec<HorocycleSample>> {
    generate(&PointSetSpec::full(n, alpha))
}

/// `P^{×d}(n; a, b)`.
pub fn gen_monomial(spec: &PointSetSpec) -> Result<Vec<HorocycleSample>> {
    expect_family(spec, Family::Monomial)?;
    generate(spec)
}

/// `Q^{×d}(n; a, b, c)`.
pub fn gen_triple(spec: &PointSetSpec) -> Result<Vec<HorocycleSample>> {
    expect_family(spec, Family::Triple)?;
    generate(spec)
}

fn expect_family(spec: &PointSetSpec, family: Family) -> Result<()> {
    if spec.family != family {
        return Err(Error::InvalidArgument(format!("expected a {family:?} spec, got {:?}", spec.family)));
    }
    Ok(())
}

/// `p^{±2d} mod n`.
fn times_p_multiplier(n: u64, p: u64, d: u64, sign: i8) -> Result<u64> {
    if gcd_u64(p, n) != 1 {
        return Err(Error::PrimeDividesModulus { prime: p, modulus: n });
    }
    let m = pow_mod(p, 2 * d, n);
    if sign >= 0 {
        Ok(m)
    } else {
        Ok(inv_mod(m, n).expect("p is a unit"))
    }
}

/// The `×p` map on pairs, `r ↦ p^{±2d}·r`, all coordinates recomputed.
pub fn apply_m(spec: &PointSetSpec, sample: &HorocycleSample, p: u64, d: u64, sign: i8) -> Result<HorocycleSample> {
    if spec.family == Family::Triple {
        return Err(Error::InvalidArgument("use apply_t for triples".into()));
    }
    let mult = times_p_multiplier(spec.n, p, d, sign)?;
    spec.sample(mul_mod(sample.residue.value(), mult, spec.n))
}

/// `(t, s, x) ↦ (p^{2d} t, p^{-2d} s, x a_{p^d}⁻¹)` on triples.
pub fn apply_t(spec: &PointSetSpec, sample: &HorocycleSample, p: u64, d: u64) -> Result<HorocycleSample> {
    expect_family(spec, Family::Triple)?;
    let mult = times_p_multiplier(spec.n, p, d, 1)?;
    spec.sample(mul_mod(sample.residue.value(), mult, spec.n))
}

/// `true` iff the matching `×p` action permutes the generated set, compared
/// on exact coordinates.
pub fn verify_invariance(spec: &PointSetSpec, p: u64) -> Result<bool> {
    verify_invariance_with(spec, p, Exec::default())
}

pub fn verify_invariance_with(spec: &PointSetSpec, p: u64, exec: Exec) -> Result<bool> {
    let samples = generate_with(spec, exec)?;
    let mut before: Vec<_> = samples.iter().map(HorocycleSample::key).collect();
    let moved: Result<Vec<_>> = par::map_slice(exec, &samples, |s| {
        let image = match spec.family {
            Family::Triple => apply_t(spec, s, p, spec.d)?,
            _ => apply_m(spec, s, p, spec.d, 1)?,
        };
        Ok(image.key())
    })
    .into_iter()
    .collect();
    let mut after = moved?;
    before.sort_unstable();
    after.sort_unstable();
    after.dedup();
    Ok(before == after)
}

/// Both sides of the level-projection identity at the real place.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelProjection {
    pub finite_places: Vec<u64>,
    pub l: Vec<u32>,
    pub m: Vec<u32>,
    /// `{(S^{l∨m} k/n mod S^l, S^{l∨m} k/n mod S^m) : k ∈ Z}`, sorted.
    pub pairs: Vec<(Rational, Rational)>,
    /// Whether the strong-approximation construction produced the same set.
    pub paths_agree: bool,
}

fn s_power(places: &[u64], exps: &[u32]) -> i128 {
    places.iter().zip(exps).map(|(&p, &e)| (p as i128).pow(e)).product()
}

/// Projection of the rational points `Δ(k/n)` to `S^l Z\R × Γ(S^m)\G`.
///
/// The direct route picks, for each `k`, an integer `r ≡ k/n` modulo
/// `S^{l∨m}` and projects the real representative `k/n − r`; the stated
/// route scales `k/n` by `S^{l∨m}`. A horocycle coset `Γ(S^m) u_t` is
/// represented by `t mod S^m`.
pub fn project_level(n: u64, places: &[u64], l: &[u32], m: &[u32]) -> Result<LevelProjection> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if places.len() != l.len() || places.len() != m.len() {
        return Err(Error::InvalidArgument("exponent vectors must match the place set".into()));
    }
    for &p in places {
        if !crate::arith::is_prime_u64(p) {
            return Err(Error::InvalidArgument(format!("{p} is not prime")));
        }
        if gcd_u64(p, n) != 1 {
            return Err(Error::NotCoprime { value: p as i128, modulus: n });
        }
    }
    let lm: Vec<u32> = l.iter().zip(m).map(|(&x, &y)| x.max(y)).collect();
    let (sl, sm, slm) = (s_power(places, l), s_power(places, m), s_power(places, &lm));
    let nn = n as i128;
    let project = |t: Rational| (t.rem_euclid(sl), t.rem_euclid(sm));

    let stated: BTreeSet<_> = (0..nn)
        .map(|k| project(Rational::new(slm * k, nn).expect("n ≥ 1")))
        .collect();

    let n_inv = inv_mod((nn % slm) as u64, slm as u64).expect("gcd(n, S) = 1") as i128;
    let direct: BTreeSet<_> = (0..nn * slm)
        .map(|k| {
            let r = (k % slm) * n_inv % slm;
            project(Rational::new(k - nn * r, nn).expect("n ≥ 1"))
        })
        .collect();

    Ok(LevelProjection {
        finite_places: places.to_vec(),
        l: l.to_vec(),
        m: m.to_vec(),
        paths_agree: stated == direct,
        pairs: stated.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i128, d: i128) -> Rational {
        Rational::new(p, d).unwrap()
    }

    #[test]
    fn full_examples() {
        let s = gen_full(1, half()).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s[0].xpoint.z - Complex64::new(0.0, 1.0)).norm() < 1e-15);

        let s = gen_full(5, half()).unwrap();
        for (k, smp) in s.iter().enumerate() {
            let z = Complex64::new(k as f64 / 5.0, 0.2);
            assert!((smp.xpoint.z - z).norm() <= 1e-12 * z.norm());
            assert_eq!(smp.torus1, q(k as i128, 5));
        }

        let s = gen_full(4, Rational::integer(1)).unwrap();
        for (k, smp) in s.iter().enumerate() {
            let z = Complex64::new(k as f64 / 4.0, 1.0 / 16.0);
            assert!((smp.xpoint.z - z).norm() <= 1e-12 * z.norm());
        }
    }

    #[test]
    fn monomial_examples() {
        let s = gen_monomial(&PointSetSpec::monomial(5, 2, 1, 1)).unwrap();
        let t: Vec<_> = s.iter().map(|x| x.torus1).collect();
        assert_eq!(t, vec![q(1, 5), q(4, 5)]);
        assert_eq!(gen_monomial(&PointSetSpec::monomial(5, 1, 1, 1)).unwrap().len(), 4);
        assert!(matches!(
            gen_monomial(&PointSetSpec::monomial(6, 1, 3, 1)),
            Err(Error::NotCoprime { .. })
        ));
        // torus and surface use different multipliers
        let s = gen_monomial(&PointSetSpec::monomial(7, 1, 2, 3)).unwrap();
        assert_eq!((s[0].torus1, s[0].horo), (q(2, 7), q(3, 7)));
    }

    #[test]
    fn triple_examples() {
        let s = gen_triple(&PointSetSpec::triple(5, 1, 1, 1, 1)).unwrap();
        let pairs: Vec<_> = s.iter().map(|x| (x.torus1, x.torus2.unwrap())).collect();
        assert_eq!(
            pairs,
            vec![(q(1, 5), q(1, 5)), (q(2, 5), q(3, 5)), (q(3, 5), q(2, 5)), (q(4, 5), q(4, 5))]
        );
        let s = gen_triple(&PointSetSpec::triple(2, 1, 1, 1, 1)).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].torus1, s[0].torus2), (q(1, 2), Some(q(1, 2))));
        assert!((s[0].xpoint.z - Complex64::new(0.5, 0.5)).norm() < 1e-15);
        let s = gen_triple(&PointSetSpec::triple(7, 3, 1, 1, 1)).unwrap();
        let r: Vec<_> = s.iter().map(|x| x.residue.value()).collect();
        assert_eq!(r, vec![1, 6]);
    }

    #[test]
    fn triple_alpha_is_fixed_unless_overridden() {
        let spec = PointSetSpec::triple(9, 1, 1, 1, 1).with_alpha(Rational::integer(2));
        assert_eq!(gen_triple(&spec).unwrap()[0].y, 1.0 / 9.0);
        let free = PointSetSpec { free_alpha: true, ..spec };
        assert!((gen_triple(&free).unwrap()[0].y - 9f64.powi(-4)).abs() < 1e-18);
    }

    #[test]
    fn m_action_examples() {
        let spec = PointSetSpec::monomial(7, 1, 1, 1);
        let s1 = spec.sample(1).unwrap();
        let img = apply_m(&spec, &s1, 3, 1, 1).unwrap();
        assert_eq!(img.residue.value(), 2);
        let back = apply_m(&spec, &img, 3, 1, -1).unwrap();
        assert_eq!(back, s1);
        let spec9 = PointSetSpec::monomial(9, 1, 1, 1);
        assert_eq!(
            apply_m(&spec9, &spec9.sample(1).unwrap(), 3, 1, 1),
            Err(Error::PrimeDividesModulus { prime: 3, modulus: 9 })
        );
    }

    #[test]
    fn t_action_examples() {
        let spec = PointSetSpec::triple(5, 1, 1, 1, 1);
        let img = apply_t(&spec, &spec.sample(1).unwrap(), 2, 1).unwrap();
        assert_eq!(img.residue.value(), 4);
        assert_eq!((img.torus1, img.torus2), (q(4, 5), Some(q(4, 5))));

        // φ(n)-fold composition is the identity
        let spec = PointSetSpec::triple(11, 2, 3, 5, 7);
        for s in gen_triple(&spec).unwrap() {
            let mut x = s;
            for _ in 0..10 {
                x = apply_t(&spec, &x, 2, 2).unwrap();
            }
            assert_eq!(x, s);
        }
        let spec4 = PointSetSpec::triple(4, 1, 1, 1, 1);
        assert!(matches!(
            apply_t(&spec4, &spec4.sample(1).unwrap(), 2, 1),
            Err(Error::PrimeDividesModulus { .. })
        ));
    }

    #[test]
    fn invariance_examples() {
        assert!(verify_invariance(&PointSetSpec::monomial(7, 1, 1, 1), 2).unwrap());
        assert!(verify_invariance(&PointSetSpec::full(7, half()), 2).unwrap());
        assert!(verify_invariance(&PointSetSpec::triple(7, 1, 1, 1, 1), 2).unwrap());
        assert!(matches!(
            verify_invariance(&PointSetSpec::triple(10, 1, 1, 1, 1), 5),
            Err(Error::PrimeDividesModulus { .. })
        ));
    }

    #[test]
    fn projection_examples() {
        let p = project_level(5, &[2], &[0], &[0]).unwrap();
        assert!(p.paths_agree);
        let expect: Vec<_> = (0..5).map(|k| (q(k, 5), q(k, 5))).collect();
        assert_eq!(p.pairs, expect);

        let p = project_level(5, &[2], &[1], &[0]).unwrap();
        assert!(p.paths_agree);
        let firsts: BTreeSet<_> = p.pairs.iter().map(|x| x.0).collect();
        let expect: BTreeSet<_> = (0..5).map(|k| q(2 * k, 5).rem_euclid(2)).collect();
        assert_eq!(firsts, expect);
        assert_eq!(firsts.len(), 5);
        assert!(p.pairs.iter().all(|&(t, s)| t.frac() == s));

        assert!(matches!(project_level(4, &[2], &[1], &[0]), Err(Error::NotCoprime { .. })));
    }

    #[test]
    fn keys_reconstruct_inverse() {
        let spec = PointSetSpec::triple(97, 2, 3, 5, 1);
        for s in gen_triple(&spec).unwrap() {
            let (t1, t2, _) = s.key();
            let a_inv = inv_mod(3, 97).unwrap();
            let r = mul_mod(t1, a_inv, 97);
            assert_eq!(mul_mod(5, inv_mod(r, 97).unwrap(), 97), t2.unwrap());
        }
    }
}
