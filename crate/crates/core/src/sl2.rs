//! `SL2(R)/SL2(Z)` geometry.
//!
//! A coset `Γg` is recorded through `z(g) = g·i` in the upper half-plane plus
//! a frame angle, so that `z(γg) = γ·z(g)` for `γ ∈ SL2(Z)`. Reduction to the
//! standard fundamental domain runs Lagrange's algorithm on the lattice
//! `Z + Zz`: the bottom row `(c, d)` of the reducing matrix is a shortest
//! vector `cz + d`. When the real part of `z` is an exact rational `k/n`, the
//! inner products are evaluated from exact integers, so the heights of
//! rational horocycle points are computed without cancellation.

use std::f64::consts::PI;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::{inv_mod, Rational};
use crate::error::{Error, Result};

/// Boundary tolerance of the fundamental-domain conventions.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealMatrix2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl RealMatrix2 {
    pub const IDENTITY: RealMatrix2 = RealMatrix2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        RealMatrix2 { a, b, c, d }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Inverse of a determinant-one matrix.
    pub fn inverse(&self) -> RealMatrix2 {
        RealMatrix2::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn max_abs_diff(&self, other: &RealMatrix2) -> f64 {
        [self.a - other.a, self.b - other.b, self.c - other.c, self.d - other.d]
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Mul for RealMatrix2 {
    type Output = RealMatrix2;
    fn mul(self, r: RealMatrix2) -> RealMatrix2 {
        RealMatrix2::new(
            self.a * r.a + self.b * r.c,
            self.a * r.b + self.b * r.d,
            self.c * r.a + self.d * r.c,
            self.c * r.b + self.d * r.d,
        )
    }
}

/// An element of `SL2(Z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntegerMatrix2 {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl IntegerMatrix2 {
    pub const IDENTITY: IntegerMatrix2 = IntegerMatrix2 { a: 1, b: 0, c: 0, d: 1 };
    /// `z ↦ −1/z`.
    pub const S: IntegerMatrix2 = IntegerMatrix2 { a: 0, b: -1, c: 1, d: 0 };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        let m = IntegerMatrix2 { a, b, c, d };
        if m.det() != 1 {
            return Err(Error::InvalidArgument(format!("determinant {} ≠ 1", m.det())));
        }
        Ok(m)
    }

    /// `z ↦ z + t`.
    pub fn translation(t: i64) -> Self {
        IntegerMatrix2 { a: 1, b: t, c: 0, d: 1 }
    }

    pub fn det(&self) -> i128 {
        self.a as i128 * self.d as i128 - self.b as i128 * self.c as i128
    }

    pub fn inverse(&self) -> IntegerMatrix2 {
        IntegerMatrix2 { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn to_real(&self) -> RealMatrix2 {
        RealMatrix2::new(self.a as f64, self.b as f64, self.c as f64, self.d as f64)
    }

    pub fn to_rational(&self) -> RationalMatrix2 {
        RationalMatrix2 {
            a: Rational::integer(self.a as i128),
            b: Rational::integer(self.b as i128),
            c: Rational::integer(self.c as i128),
            d: Rational::integer(self.d as i128),
        }
    }

    /// `γ` and `−γ` act identically; this picks `c > 0`, or `c = 0, d > 0`.
    pub fn projective_normal(&self) -> IntegerMatrix2 {
        if self.c < 0 || (self.c == 0 && self.d < 0) {
            IntegerMatrix2 { a: -self.a, b: -self.b, c: -self.c, d: -self.d }
        } else {
            *self
        }
    }
}

impl Mul for IntegerMatrix2 {
    type Output = IntegerMatrix2;
    fn mul(self, r: IntegerMatrix2) -> IntegerMatrix2 {
        IntegerMatrix2 {
            a: self.a * r.a + self.b * r.c,
            b: self.a * r.b + self.b * r.d,
            c: self.c * r.a + self.d * r.c,
            d: self.c * r.b + self.d * r.d,
        }
    }
}

/// Matrix with exact rational entries, for identities that must hold exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RationalMatrix2 {
    pub a: Rational,
    pub b: Rational,
    pub c: Rational,
    pub d: Rational,
}

impl RationalMatrix2 {
    pub fn det(&self) -> Rational {
        self.a * self.d - self.b * self.c
    }
}

impl Mul for RationalMatrix2 {
    type Output = RationalMatrix2;
    fn mul(self, r: RationalMatrix2) -> RationalMatrix2 {
        RationalMatrix2 {
            a: self.a * r.a + self.b * r.c,
            b: self.a * r.b + self.b * r.d,
            c: self.c * r.a + self.d * r.c,
            d: self.c * r.b + self.d * r.d,
        }
    }
}

/// `u_t = (1 t; 0 1)`.
pub fn make_u(t: f64) -> RealMatrix2 {
    RealMatrix2::new(1.0, t, 0.0, 1.0)
}

/// `a_y = (y 0; 0 1/y)`.
pub fn make_a(y: f64) -> Result<RealMatrix2> {
    if y.is_nan() || y <= 0.0 {
        return Err(Error::NonPositiveDiagonal(y));
    }
    Ok(RealMatrix2::new(y, 0.0, 0.0, 1.0 / y))
}

/// `v_s = (1 0; s 1)`.
pub fn make_v(s: f64) -> RealMatrix2 {
    RealMatrix2::new(1.0, 0.0, s, 1.0)
}

pub fn rational_u(t: Rational) -> RationalMatrix2 {
    RationalMatrix2 { a: Rational::integer(1), b: t, c: Rational::zero(), d: Rational::integer(1) }
}

pub fn rational_v(s: Rational) -> RationalMatrix2 {
    RationalMatrix2 { a: Rational::integer(1), b: Rational::zero(), c: s, d: Rational::integer(1) }
}

/// `a_y` for rational `y > 0`.
pub fn rational_a(y: Rational) -> Result<RationalMatrix2> {
    if y.is_negative() || y.is_zero() {
        return Err(Error::NonPositiveDiagonal(y.to_f64()));
    }
    Ok(RationalMatrix2 { a: y, b: Rational::zero(), c: Rational::zero(), d: y.recip()? })
}

/// `(az + b)/(cz + d)`.
pub fn mobius(g: &RealMatrix2, z: Complex64) -> Complex64 {
    (g.a * z + g.b) / (g.c * z + g.d)
}

/// Integer Möbius action; `cx + d` and `ax + b` are formed with a single
/// rounding each.
pub fn mobius_int(g: &IntegerMatrix2, z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let (a, b, c, d) = (g.a as f64, g.b as f64, g.c as f64, g.d as f64);
    let (top, bottom) = (a.mul_add(x, b), c.mul_add(x, d));
    let norm = bottom.mul_add(bottom, (c * y) * (c * y));
    Complex64::new(top.mul_add(bottom, (a * c) * (y * y)) / norm, y / norm)
}

/// A point of `SL2(Z)\SL2(R)`: base point `z` and frame angle `theta ∈ [0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FramedPoint {
    pub z: Complex64,
    pub theta: f64,
}

fn canonical_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    if t >= PI {
        0.0
    } else {
        t
    }
}

impl FramedPoint {
    pub fn new(z: Complex64, theta: f64) -> Result<Self> {
        if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::InvalidArgument(format!("{z} is not in the upper half-plane")));
        }
        Ok(FramedPoint { z, theta: canonical_angle(theta) })
    }

    /// A representative `u_x a_{√y} k_θ` of the coset.
    pub fn to_matrix(&self) -> RealMatrix2 {
        let sy = self.z.im.sqrt();
        let (s, c) = self.theta.sin_cos();
        make_u(self.z.re) * RealMatrix2::new(sy, 0.0, 0.0, 1.0 / sy) * RealMatrix2::new(c, -s, s, c)
    }

    /// Left translation by `γ`: the coset of `γg`.
    pub fn translate(&self, gamma: &IntegerMatrix2) -> FramedPoint {
        let g = gamma.to_real() * self.to_matrix();
        FramedPoint {
            z: mobius_int(gamma, self.z),
            theta: canonical_angle(g.c.atan2(g.d)),
        }
    }
}

/// `z(g) = g·i`; the angle comes from the rotation factor of `g = u_x a k_θ`,
/// whose bottom row is proportional to `(sin θ, cos θ)`.
pub fn to_point(g: &RealMatrix2) -> FramedPoint {
    FramedPoint {
        z: mobius(g, Complex64::new(0.0, 1.0)),
        theta: canonical_angle(g.c.atan2(g.d)),
    }
}

/// A fundamental-domain representative with its reducing matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedPoint {
    pub point: FramedPoint,
    pub reducer: IntegerMatrix2,
    pub height: f64,
}

/// Real part of the base point, either exact or floating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RealPart {
    Float(f64),
    /// `numer/denom` with `denom > 0`.
    Exact { numer: i128, denom: i128 },
}

/// Inner products on the lattice `Z·z + Z·1`, indexed by coefficient pairs
/// `(c, d) ↦ cz + d`.
struct Lattice {
    re: RealPart,
    y: f64,
}

impl Lattice {
    /// `Re((c1 z + d1) · conj(c2 z + d2))`.
    fn dot(&self, (c1, d1): (i64, i64), (c2, d2): (i64, i64)) -> f64 {
        let real = match self.re {
            RealPart::Float(x) => (c1 as f64).mul_add(x, d1 as f64) * (c2 as f64).mul_add(x, d2 as f64),
            RealPart::Exact { numer, denom } => {
                let u = c1 as i128 * numer + d1 as i128 * denom;
                let v = c2 as i128 * numer + d2 as i128 * denom;
                let q = denom as f64;
                (u as f64 / q) * (v as f64 / q)
            }
        };
        real + (c1 as f64 * c2 as f64) * self.y * self.y
    }

    fn norm(&self, v: (i64, i64)) -> f64 {
        self.dot(v, v)
    }

    /// `Re((a z + b)·conj(c z + d))` for the image of `z` under `(a b; c d)`.
    fn image(&self, g: &IntegerMatrix2) -> Complex64 {
        let denom = self.norm((g.c, g.d));
        let re = self.dot((g.a, g.b), (g.c, g.d)) / denom;
        Complex64::new(re, self.y / denom)
    }
}

fn round_half_down(x: f64) -> f64 {
    // ties toward −∞ so that Re z = 1/2 lands on −1/2
    (x - 0.5).ceil()
}

fn reduce_parts(re: RealPart, y: f64, theta: f64) -> Result<ReducedPoint> {
    if !(y > 0.0) || !y.is_finite() || y < f64::MIN_POSITIVE {
        return Err(Error::NumericalDegeneracy(format!("imaginary part {y} is not representable")));
    }
    let lat = Lattice { re, y };
    // Lagrange reduction: b1 ends as a shortest vector c z + d.
    let (mut b1, mut b2) = ((0i64, 1i64), (1i64, 0i64));
    if lat.norm(b2) < lat.norm(b1) {
        std::mem::swap(&mut b1, &mut b2);
    }
    for _ in 0..10_000 {
        let mu = (lat.dot(b1, b2) / lat.norm(b1)).round();
        if mu.abs() > 9.0e15 {
            return Err(Error::NumericalDegeneracy("reduction coefficient overflow".into()));
        }
        let mu = mu as i64;
        let r = (b2.0 - mu * b1.0, b2.1 - mu * b1.1);
        if lat.norm(r) < lat.norm(b1) {
            b2 = b1;
            b1 = r;
        } else {
            break;
        }
    }
    let (c, d) = if b1.0 < 0 || (b1.0 == 0 && b1.1 < 0) { (-b1.0, -b1.1) } else { b1 };
    // complete (c, d) to an SL2(Z) matrix
    let (a, b) = if c == 0 {
        (1, 0)
    } else {
        let dm = d.rem_euclid(c) as u64;
        let a = inv_mod(dm, c as u64).ok_or_else(|| {
            Error::NumericalDegeneracy(format!("non-primitive reduction vector ({c}, {d})"))
        })? as i64;
        // a d − b c = 1
        (a, (a as i128 * d as i128 - 1).div_euclid(c as i128) as i64)
    };
    let mut gamma = IntegerMatrix2 { a, b, c, d };
    debug_assert_eq!(gamma.det(), 1);

    let shift = round_half_down(lat.image(&gamma).re) as i64;
    gamma = IntegerMatrix2::translation(-shift) * gamma;
    let mut w = lat.image(&gamma);
    if (w.norm_sqr() - 1.0).abs() <= BOUNDARY_TOL && w.re > BOUNDARY_TOL {
        gamma = IntegerMatrix2::S * gamma;
        w = lat.image(&gamma);
    }
    if (w.re - 0.5).abs() <= BOUNDARY_TOL {
        gamma = IntegerMatrix2::translation(-1) * gamma;
        w = lat.image(&gamma);
    }
    let x = match re {
        RealPart::Float(x) => x,
        RealPart::Exact { numer, denom } => numer as f64 / denom as f64,
    };
    let original = FramedPoint { z: Complex64::new(x, y), theta };
    let mut point = original.translate(&gamma);
    point.z = w;
    Ok(ReducedPoint { point, reducer: gamma, height: w.im })
}

/// Reduction to `|Re z| ≤ 1/2`, `|z| ≥ 1`. On the unit circle the
/// representative with `Re z ≤ 0` is chosen, and `Re z = 1/2` maps to `−1/2`.
pub fn reduce(p: &FramedPoint) -> Result<ReducedPoint> {
    reduce_parts(RealPart::Float(p.z.re), p.z.im, p.theta)
}

/// Reduction of `k/n + iy` with the real part kept exact.
pub fn reduce_rational(x: Rational, y: f64) -> Result<ReducedPoint> {
    reduce_parts(RealPart::Exact { numer: x.numer(), denom: x.denom() }, y, 0.0)
}

/// Cusp height `Im z_F` of the reduced representative.
pub fn invariant_height(p: &FramedPoint) -> Result<f64> {
    Ok(reduce(p)?.height)
}

/// `sup ‖Ad(g⁻¹)v‖_∞⁻¹` over nonzero `v = hH + xX + yY`, `H = (−1 0; 0 1)`,
/// `X = (0 1; 0 0)`, `Y = (0 0; 1 0)`, with integer coefficients.
///
/// The search box is the smaller of `bound` and a radius certified from the
/// best norm seen so far: if `‖Ad(g⁻¹)v‖ ≤ r` then every coefficient of `v`
/// is at most `r·rowsum(g)·colsum(g⁻¹)`.
pub fn adjoint_height(g: &RealMatrix2, bound: u64) -> f64 {
    let gi = g.inverse();
    let conj = |h: f64, x: f64, y: f64| {
        let v = RealMatrix2::new(-h, x, y, h);
        let w = gi * v * *g;
        w.a.abs().max(w.b.abs()).max(w.c.abs()).max(w.d.abs())
    };
    let mut best = conj(1.0, 0.0, 0.0).min(conj(0.0, 1.0, 0.0)).min(conj(0.0, 0.0, 1.0));
    let rows = (g.a.abs() + g.b.abs()).max(g.c.abs() + g.d.abs());
    let cols = (gi.a.abs() + gi.c.abs()).max(gi.b.abs() + gi.d.abs());
    let certified = (best * rows * cols).floor() as u64;
    let r = certified.min(bound) as i64;
    for h in -r..=r {
        for x in -r..=r {
            for y in -r..=r {
                if (h, x, y) != (0, 0, 0) {
                    best = best.min(conj(h as f64, x as f64, y as f64));
                }
            }
        }
    }
    1.0 / best
}

/// Default enumeration bound `4·(1 + height)`.
pub fn default_adjoint_bound(g: &RealMatrix2) -> Result<u64> {
    let h = invariant_height(&to_point(g))?;
    Ok((4.0 * (1.0 + h)).ceil() as u64)
}

/// `γ = (n −k; k̄ (1 − k·k̄)/n)` with `γ·u_{k/n}·a_n⁻¹ = v_{k̄/n}`.
pub fn intersection_witness(k: i64, n: u64) -> Result<IntegerMatrix2> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let km = k.rem_euclid(n as i64) as u64;
    let kbar = inv_mod(km, n).ok_or(Error::NotCoprime { value: k as i128, modulus: n })? as i64;
    let n = n as i64;
    let num = 1 - k as i128 * kbar as i128;
    debug_assert_eq!(num % n as i128, 0);
    IntegerMatrix2::new(n, -k, kbar, (num / n as i128) as i64)
}

/// Checks `γ·u_{k/n}·a_n⁻¹ = v_{k̄/n}` in exact rational arithmetic.
pub fn verify_intersection(k: i64, n: u64) -> Result<bool> {
    let gamma = intersection_witness(k, n)?;
    let nn = n as i128;
    let t = Rational::new(k as i128, nn)?;
    let lhs = gamma.to_rational() * rational_u(t) * rational_a(Rational::new(1, nn)?)?;
    let rhs = rational_v(Rational::new(gamma.c as i128, nn)?);
    Ok(gamma.det() == 1 && lhs == rhs)
}
