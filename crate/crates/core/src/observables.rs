//! Test functions on the torus, the two-torus and the modular surface, with
//! their Haar expectations.

use std::f64::consts::PI;
use std::fmt;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::{gcd_u64, inv_mod, reduce_i128, unit_root, Rational};
use crate::error::{Error, Result};
use crate::points::HorocycleSample;
use crate::sl2::{reduce, FramedPoint, ReducedPoint};

/// Largest kernel radius accepted by [`kernel_value`].
pub const MAX_RADIUS: f64 = 3.0;

/// `3/π`, the inverse covolume of `PSL2(Z)` in `H`.
const INV_COVOLUME: f64 = 3.0 / PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `1` on `[0, R]`.
    Indicator,
    /// `(1 − (r/R)²)²` on `[0, R]`.
    SmoothBump,
}

impl Profile {
    pub fn at(self, r: f64, radius: f64) -> f64 {
        if r > radius {
            return 0.0;
        }
        match self {
            Profile::Indicator => 1.0,
            Profile::SmoothBump => {
                let s = r / radius;
                (1.0 - s * s).powi(2)
            }
        }
    }
}

fn default_center() -> Complex64 {
    Complex64::new(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    Constant {
        value: f64,
    },
    TorusChar {
        m: i64,
    },
    TwoTorusChar {
        m1: i64,
        m2: i64,
    },
    AutomorphicKernel {
        radius: f64,
        profile: Profile,
        #[serde(default = "default_center")]
        center: Complex64,
    },
    /// Crisp indicator of `invariant_height ∈ (t1, t2]`; `t2 = None` is `∞`.
    HeightBand {
        t1: f64,
        #[serde(default)]
        t2: Option<f64>,
    },
    Product {
        factors: Vec<Observable>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Torus,
    TwoTorus,
    Surface,
}

impl Observable {
    pub fn kernel(radius: f64, profile: Profile) -> Self {
        Observable::AutomorphicKernel { radius, profile, center: default_center() }
    }

    pub fn product(factors: Vec<Observable>) -> Result<Self> {
        let obs = Observable::Product { factors };
        obs.validate()?;
        Ok(obs)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Observable::AutomorphicKernel { radius, center, .. } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidArgument(format!("kernel radius {radius} must be positive")));
                }
                if *radius > MAX_RADIUS {
                    return Err(Error::RadiusTooLarge(*radius));
                }
                if !(center.im > 0.0) || !center.re.is_finite() || !center.im.is_finite() {
                    return Err(Error::InvalidArgument(format!("kernel center {center} is not in H")));
                }
                Ok(())
            }
            Observable::HeightBand { t1, t2 } => {
                if !(*t1 >= 1.0) || !t1.is_finite() {
                    return Err(Error::InvalidArgument(format!("height band needs t1 ≥ 1, got {t1}")));
                }
                if let Some(t2) = t2 {
                    if !(t2 > t1) {
                        return Err(Error::InvalidArgument(format!("height band needs t1 < t2, got ({t1}, {t2}]")));
                    }
                }
                Ok(())
            }
            Observable::Product { factors } => {
                let mut slots = Vec::new();
                for f in factors {
                    f.validate()?;
                    f.collect_slots(&mut slots);
                }
                let clash = |a: Slot, b: Slot| a == b || matches!((a, b), (Slot::Torus, Slot::TwoTorus) | (Slot::TwoTorus, Slot::Torus));
                for (i, &a) in slots.iter().enumerate() {
                    if slots[i + 1..].iter().any(|&b| clash(a, b)) {
                        return Err(Error::OverlappingFactors(format!("{self}")));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn collect_slots(&self, out: &mut Vec<Slot>) {
        match self {
            Observable::Constant { .. } => {}
            Observable::TorusChar { .. } => out.push(Slot::Torus),
            Observable::TwoTorusChar { .. } => out.push(Slot::TwoTorus),
            Observable::AutomorphicKernel { .. } | Observable::HeightBand { .. } => out.push(Slot::Surface),
            Observable::Product { factors } => factors.iter().for_each(|f| f.collect_slots(out)),
        }
    }

    /// Whether evaluation needs the reduced surface point.
    pub fn uses_surface(&self) -> bool {
        let mut slots = Vec::new();
        self.collect_slots(&mut slots);
        slots.contains(&Slot::Surface)
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Constant { value } => write!(f, "{value}"),
            Observable::TorusChar { m } => write!(f, "e({m}t)"),
            Observable::TwoTorusChar { m1, m2 } => write!(f, "e({m1}t+{m2}s)"),
            Observable::AutomorphicKernel { radius, profile, center } => {
                let p = match profile {
                    Profile::Indicator => "indicator",
                    Profile::SmoothBump => "smooth",
                };
                if *center == default_center() {
                    write!(f, "kernel(R={radius},{p})")
                } else {
                    write!(f, "kernel(R={radius},{p},center={}+{}i)", center.re, center.im)
                }
            }
            Observable::HeightBand { t1, t2: Some(t2) } => write!(f, "height({t1},{t2}]"),
            Observable::HeightBand { t1, t2: None } => write!(f, "height({t1},inf)"),
            Observable::Product { factors } => {
                let parts: Vec<String> = factors.iter().map(|x| x.to_string()).collect();
                write!(f, "{}", parts.join("*"))
            }
        }
    }
}

/// `e(m·t)` for `t = p/q`, reduced exactly before exponentiating.
fn char_at(m: i64, t: Rational) -> Complex64 {
    let q = t.denom();
    let r = reduce_i128((m as i128 * t.numer()) % q, q as u64);
    unit_root(r, q as u64)
}

/// `e(m1·t + m2·s)` with both coordinates over the same modulus handled exactly.
fn char2_at(m1: i64, m2: i64, t: Rational, s: Rational) -> Complex64 {
    let q = num_integer::lcm(t.denom(), s.denom());
    let num = m1 as i128 * t.numer() * (q / t.denom()) + m2 as i128 * s.numer() * (q / s.denom());
    unit_root(reduce_i128(num % q, q as u64), q as u64)
}

/// Evaluates `obs` at one sample.
pub fn eval(obs: &Observable, sample: &HorocycleSample) -> Result<Complex64> {
    let reduced = if obs.uses_surface() { Some(sample.reduced()?) } else { None };
    eval_with(obs, sample, reduced.as_ref())
}

/// Evaluates `obs` reusing an already reduced surface point.
pub fn eval_with(obs: &Observable, sample: &HorocycleSample, reduced: Option<&ReducedPoint>) -> Result<Complex64> {
    let surface = || {
        reduced.ok_or_else(|| Error::InvalidArgument("surface observable evaluated without a reduced point".into()))
    };
    Ok(match obs {
        Observable::Constant { value } => Complex64::new(*value, 0.0),
        Observable::TorusChar { m } => char_at(*m, sample.torus1),
        Observable::TwoTorusChar { m1, m2 } => {
            let s = sample
                .torus2
                .ok_or_else(|| Error::InvalidArgument("two-torus character needs a triple sample".into()))?;
            char2_at(*m1, *m2, sample.torus1, s)
        }
        Observable::AutomorphicKernel { radius, profile, center } => {
            let z = surface()?.point.z;
            Complex64::new(kernel_reduced(z, *radius, *profile, *center, 1.0)?, 0.0)
        }
        Observable::HeightBand { t1, t2 } => {
            let h = surface()?.height;
            let inside = h > *t1 && t2.map_or(true, |t2| h <= t2);
            Complex64::new(if inside { 1.0 } else { 0.0 }, 0.0)
        }
        Observable::Product { factors } => {
            let mut acc = Complex64::new(1.0, 0.0);
            for f in factors {
                acc *= eval_with(f, sample, reduced)?;
            }
            acc
        }
    })
}

/// `cosh` of the hyperbolic distance between two points of `H`.
pub fn cosh_distance(z: Complex64, w: Complex64) -> f64 {
    1.0 + (z - w).norm_sqr() / (2.0 * z.im * w.im)
}

/// `Σ_{γ ∈ PSL2(Z)} k(dist(γz, center))`.
pub fn kernel_value(z: Complex64, radius: f64, profile: Profile, center: Complex64) -> Result<f64> {
    kernel_value_scaled(z, radius, profile, center, 1.0)
}

/// [`kernel_value`] with every enumeration bound widened by `scale ≥ 1`.
pub fn kernel_value_scaled(z: Complex64, radius: f64, profile: Profile, center: Complex64, scale: f64) -> Result<f64> {
    Observable::AutomorphicKernel { radius, profile, center }.validate()?;
    let zr = reduce(&FramedPoint { z, theta: 0.0 })?.point.z;
    kernel_reduced(zr, radius, profile, center, scale)
}

/// Orbit sum for `z` already in the fundamental domain.
///
/// A term is nonzero only if `Im γz ≥ Im(center)·e^{-R}`, which bounds the
/// bottom row `(c, d)` through `|cz + d|² ≤ Im z·e^R / Im(center)`. For each
/// coprime bottom row one representative `γ0` is completed and the
/// translates `T^j γ0` inside the horizontal window of the ball are summed.
fn kernel_reduced(z: Complex64, radius: f64, profile: Profile, center: Complex64, scale: f64) -> Result<f64> {
    if radius > MAX_RADIUS {
        return Err(Error::RadiusTooLarge(radius));
    }
    let slack = 1.0 + 1e-9;
    let (x, y) = (z.re, z.im);
    let cosh_r = radius.cosh();
    let bound = scale * slack * y * radius.exp() / center.im;
    let c_max = (bound.sqrt() / y).floor() as i64;
    let mut total = Vec::new();
    for c in 0..=c_max {
        let rest = bound - (c as f64 * y).powi(2);
        if rest < 0.0 {
            continue;
        }
        let (d_lo, d_hi) = if c == 0 {
            (1, 1)
        } else {
            let w = rest.sqrt();
            ((-(c as f64) * x - w).ceil() as i64, (-(c as f64) * x + w).floor() as i64)
        };
        for d in d_lo..=d_hi {
            if gcd_u64(c.unsigned_abs(), d.unsigned_abs()) != 1 {
                continue;
            }
            let image = if c == 0 {
                z
            } else {
                let a = inv_mod(reduce_i128(d as i128, c as u64), c as u64).expect("coprime") as f64;
                let czd = Complex64::new(c as f64 * x + d as f64, c as f64 * y);
                a / c as f64 - 1.0 / (c as f64 * czd)
            };
            let yy = image.im;
            // (Re γz + j − u)² ≤ 2·Y·v·(cosh R − 1) − (Y − v)²
            let window = 2.0 * yy * center.im * (cosh_r - 1.0) - (yy - center.im).powi(2);
            let window = scale * slack * window + (slack - 1.0);
            if window < 0.0 {
                continue;
            }
            let half = window.sqrt();
            let j_lo = (center.re - image.re - half).ceil() as i64;
            let j_hi = (center.re - image.re + half).floor() as i64;
            for j in j_lo..=j_hi {
                let p = Complex64::new(image.re + j as f64, yy);
                let r = cosh_distance(p, center).max(1.0).acosh();
                let v = profile.at(r, radius);
                if v != 0.0 {
                    total.push(v);
                }
            }
        }
    }
    Ok(crate::par::pairwise_sum(&total))
}

/// Haar expectation and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaarTarget {
    pub value: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    NumericOracle { tolerance: f64 },
}

/// Tolerance claimed for quadrature-based targets.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// `∫_0^R k(r) sinh r dr` by Gauss–Legendre quadrature.
pub fn radial_integral(radius: f64, profile: Profile) -> f64 {
    let rule = GaussLegendre::new(40).expect("positive degree");
    rule.integrate(0.0, radius, |r| profile.at(r, radius) * r.sinh())
}

pub fn haar_expectation(obs: &Observable) -> HaarTarget {
    let exact = |value| HaarTarget { value, provenance: Provenance::Exact };
    match obs {
        Observable::Constant { value } => exact(*value),
        Observable::TorusChar { m } => exact(if *m == 0 { 1.0 } else { 0.0 }),
        Observable::TwoTorusChar { m1, m2 } => exact(if *m1 == 0 && *m2 == 0 { 1.0 } else { 0.0 }),
        Observable::AutomorphicKernel { radius, profile, .. } => HaarTarget {
            value: INV_COVOLUME * 2.0 * PI * radial_integral(*radius, *profile),
            provenance: Provenance::NumericOracle { tolerance: QUADRATURE_TOL },
        },
        Observable::HeightBand { t1, t2 } => exact(INV_COVOLUME * (1.0 / t1 - t2.map_or(0.0, |t2| 1.0 / t2))),
        Observable::Product { factors } => {
            let mut value = 1.0;
            let mut provenance = Provenance::Exact;
            for f in factors {
                let h = haar_expectation(f);
                value *= h.value;
                if let Provenance::NumericOracle { .. } = h.provenance {
                    provenance = h.provenance;
                }
            }
            HaarTarget { value, provenance }
        }
    }
}

/// `(Σ |α_m|² (1 + |m/R|)^{2D})^{1/2}`.
pub fn sobolev_norm_torus(coefficients: &[(i64, Complex64)], degree: u32, period: f64) -> f64 {
    coefficients
        .iter()
        .map(|(m, a)| a.norm_sqr() * (1.0 + (*m as f64 / period).abs()).powi(2 * degree as i32))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::{gen_full, PointSetSpec};
    use crate::sl2::{mobius_int, IntegerMatrix2};

    const I: Complex64 = Complex64::new(0.0, 1.0);

    /// Sum over all integer matrices with entries bounded by `e`, one per ±.
    fn brute_kernel(z: Complex64, radius: f64, profile: Profile, center: Complex64, e: i64) -> f64 {
        let mut total = 0.0;
        for a in -e..=e {
            for b in -e..=e {
                for c in -e..=e {
                    for d in -e..=e {
                        if a * d - b * c != 1 {
                            continue;
                        }
                        // one representative of ±γ
                        if (c, d) < (0, 0) || (c == 0 && d < 0) {
                            continue;
                        }
                        let g = IntegerMatrix2::new(a, b, c, d).unwrap();
                        let r = cosh_distance(mobius_int(&g, z), center).max(1.0).acosh();
                        total += profile.at(r, radius);
                    }
                }
            }
        }
        total
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_value(I, 1.0, Profile::Indicator, I).unwrap(), 10.0);
        assert_eq!(brute_kernel(I, 1.0, Profile::Indicator, I, 10), 10.0);
        assert_eq!(kernel_value(Complex64::new(0.0, 10.0), 1.0, Profile::Indicator, I).unwrap(), 0.0);
        assert_eq!(kernel_value(I, 3.5, Profile::Indicator, I), Err(Error::RadiusTooLarge(3.5)));
    }

    #[test]
    fn kernel_matches_brute_force_enumeration() {
        let zs = [
            Complex64::new(0.1, 0.9),
            Complex64::new(-0.37, 1.3),
            Complex64::new(0.5, 0.8660254037844386),
            Complex64::new(0.2, 2.5),
            Complex64::new(0.45, 1.01),
        ];
        let centers = [I, Complex64::new(0.3, 1.7), Complex64::new(-0.2, 0.6)];
        for &z in &zs {
            for &w in &centers {
                for &(radius, profile) in &[(1.0, Profile::Indicator), (1.0, Profile::SmoothBump), (2.2, Profile::SmoothBump)] {
                    let fast = kernel_value(z, radius, profile, w).unwrap();
                    let slow = brute_kernel(z, radius, profile, w, 12);
                    assert!((fast - slow).abs() < 1e-12, "z={z} w={w} R={radius}: {fast} vs {slow}");
                }
            }
        }
    }

    #[test]
    fn enumeration_is_complete_under_doubling() {
        for i in 0..200 {
            let z = Complex64::new((i as f64 * 0.173).sin() * 3.0, 0.05 + (i as f64 * 0.311).cos().abs() * 2.0);
            for &radius in &[0.5, 1.0, 3.0] {
                let a = kernel_value_scaled(z, radius, Profile::SmoothBump, I, 1.0).unwrap();
                let b = kernel_value_scaled(z, radius, Profile::SmoothBump, I, 2.0).unwrap();
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn torus_char_example() {
        let t = Rational::new(1, 4).unwrap();
        assert!((char_at(2, t) - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        let spec = PointSetSpec::full(8, Rational::new(1, 2).unwrap());
        let s = spec.sample(2).unwrap();
        let v = eval(&Observable::TorusChar { m: 2 }, &s).unwrap();
        assert!((v + 1.0).norm() < 1e-15);
    }

    /// `∫_0^R r^k sinh r dr` from the recursion `I_k = R^k cosh R − k J_{k−1}`,
    /// `J_k = R^k sinh R − k I_{k−1}`.
    fn sinh_moment(k: u32, radius: f64) -> f64 {
        fn pair(k: u32, r: f64) -> (f64, f64) {
            // (∫ r^k sinh, ∫ r^k cosh)
            if k == 0 {
                return (r.cosh() - 1.0, r.sinh());
            }
            let (s, c) = pair(k - 1, r);
            let rk = r.powi(k as i32);
            (rk * r.cosh() - k as f64 * c, rk * r.sinh() - k as f64 * s)
        }
        pair(k, radius).0
    }

    #[test]
    fn haar_kernel_matches_closed_form() {
        for &radius in &[0.3, 1.0, 2.0, 3.0] {
            let ind = haar_expectation(&Observable::kernel(radius, Profile::Indicator)).value;
            assert!((ind - 6.0 * (radius.cosh() - 1.0)).abs() < 1e-10);
            let r2 = radius * radius;
            let bump = sinh_moment(0, radius) - 2.0 * sinh_moment(2, radius) / r2 + sinh_moment(4, radius) / (r2 * r2);
            let got = haar_expectation(&Observable::kernel(radius, Profile::SmoothBump)).value;
            assert!((got - 6.0 * bump).abs() < 1e-10, "R={radius}: {got} vs {}", 6.0 * bump);
        }
        let v = haar_expectation(&Observable::kernel(1.0, Profile::Indicator)).value;
        assert!((v - 12.0 * 0.5f64.sinh().powi(2)).abs() < 1e-12);
        assert!((v - 3.258484).abs() < 1e-6);
    }

    #[test]
    fn haar_examples() {
        assert_eq!(haar_expectation(&Observable::TorusChar { m: 3 }).value, 0.0);
        let band = haar_expectation(&Observable::HeightBand { t1: 2.0, t2: None }).value;
        assert!((band - 3.0 / (2.0 * PI)).abs() < 1e-15);
        let cuts = [1.0, 1.5, 2.0, 3.7, 10.0];
        let mut total = haar_expectation(&Observable::HeightBand { t1: 10.0, t2: None }).value;
        for w in cuts.windows(2) {
            total += haar_expectation(&Observable::HeightBand { t1: w[0], t2: Some(w[1]) }).value;
        }
        assert!((total - 3.0 / PI).abs() < 1e-12);
        let prod = Observable::product(vec![Observable::TorusChar { m: 0 }, Observable::HeightBand { t1: 2.0, t2: None }]).unwrap();
        assert!((haar_expectation(&prod).value - band).abs() < 1e-15);
    }

    #[test]
    fn product_factors_must_be_disjoint() {
        let k = Observable::kernel(1.0, Profile::SmoothBump);
        assert!(Observable::product(vec![Observable::TorusChar { m: 1 }, k.clone()]).is_ok());
        assert!(matches!(
            Observable::product(vec![k.clone(), Observable::HeightBand { t1: 2.0, t2: None }]),
            Err(Error::OverlappingFactors(_))
        ));
        assert!(matches!(
            Observable::product(vec![Observable::TorusChar { m: 1 }, Observable::TwoTorusChar { m1: 1, m2: 1 }]),
            Err(Error::OverlappingFactors(_))
        ));
    }

    #[test]
    fn height_band_validation() {
        assert!(Observable::HeightBand { t1: 0.5, t2: None }.validate().is_err());
        assert!(Observable::HeightBand { t1: 2.0, t2: Some(2.0) }.validate().is_err());
    }

    #[test]
    fn height_band_counts_reduced_heights() {
        // heights at n = 2, α = 1/2 are {2, 1}
        let s = gen_full(2, Rational::new(1, 2).unwrap()).unwrap();
        let band = Observable::HeightBand { t1: 1.5, t2: None };
        let vals: Vec<f64> = s.iter().map(|x| eval(&band, x).unwrap().re).collect();
        assert_eq!(vals, vec![1.0, 0.0]);
    }

    #[test]
    fn sobolev_examples() {
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(sobolev_norm_torus(&[(3, one)], 2, 1.0), 16.0);
        assert_eq!(sobolev_norm_torus(&[], 2, 1.0), 0.0);
        assert!((sobolev_norm_torus(&[(1, one), (2, one)], 1, 1.0) - 13f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn observables_round_trip_through_json() {
        let obs = Observable::product(vec![Observable::TorusChar { m: 1 }, Observable::kernel(1.0, Profile::SmoothBump)]).unwrap();
        let text = serde_json::to_string(&obs).unwrap();
        assert_eq!(serde_json::from_str::<Observable>(&text).unwrap(), obs);
        let parsed: Observable = serde_json::from_str(r#"{"kind":"automorphic_kernel","radius":1.0,"profile":"indicator"}"#).unwrap();
        assert_eq!(parsed, Observable::kernel(1.0, Profile::Indicator));
    }
}
