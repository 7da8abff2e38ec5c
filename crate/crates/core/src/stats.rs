//! Empirical averages, exponential-sum identities, discrepancy, mixing
//! correlations and decay-rate fits.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::arith::{gcd_u64, pow_mod, primes_coprime, reduce_i128, totient_u64, unit_root, units};
use crate::error::{Error, Result};
use crate::observables::{eval_with, haar_expectation, Observable};
use crate::par::{self, Exec};
use crate::points::{generate_with, HorocycleSample, PointSetSpec};

/// FFT planner reused across batched Weyl sums.
pub type WeylPlanner = FftPlanner<f64>;

/// Mean of `obs` over `samples`.
pub fn empirical_average(samples: &[HorocycleSample], obs: &Observable) -> Result<Complex64> {
    empirical_average_with(Exec::default(), samples, obs)
}

pub fn empirical_average_with(exec: Exec, samples: &[HorocycleSample], obs: &Observable) -> Result<Complex64> {
    Ok(empirical_averages_with(exec, samples, std::slice::from_ref(obs))?[0])
}

/// Means of several observables, reducing each surface point once.
pub fn empirical_averages_with(exec: Exec, samples: &[HorocycleSample], obs: &[Observable]) -> Result<Vec<Complex64>> {
    if samples.is_empty() {
        return Err(Error::EmptySet);
    }
    for o in obs {
        o.validate()?;
    }
    let surface = obs.iter().any(Observable::uses_surface);
    let rows: Vec<Result<Vec<Complex64>>> = par::map_slice(exec, samples, |s| {
        let reduced = if surface { Some(s.reduced()?) } else { None };
        obs.iter().map(|o| eval_with(o, s, reduced.as_ref())).collect()
    });
    let rows: Vec<Vec<Complex64>> = rows.into_iter().collect::<Result<_>>()?;
    let len = samples.len() as f64;
    Ok((0..obs.len())
        .map(|j| par::sum_indexed(exec, rows.len(), |i| rows[i][j]) / len)
        .collect())
}

/// `(1/φ(n)) Σ_{(k,n)=1} e(m1·k/n)·e(m2·k̄/n)` with `k̄ = k^{φ(n)−1}`.
pub fn kloosterman_average(n: u64, m1: i64, m2: i64) -> Complex64 {
    kloosterman_average_with(Exec::default(), n, m1, m2)
}

pub fn kloosterman_average_with(exec: Exec, n: u64, m1: i64, m2: i64) -> Complex64 {
    assert!(n >= 1, "kloosterman_average needs n ≥ 1");
    let phi = totient_u64(n);
    let us = units(n);
    let (a, b) = (reduce_i128(m1 as i128, n), reduce_i128(m2 as i128, n));
    let total = par::sum_slice(exec, &us, |&k| {
        let kbar = pow_mod(k, phi - 1, n);
        let r1 = (a as u128 * k as u128 % n as u128) as u64;
        let r2 = (b as u128 * kbar as u128 % n as u128) as u64;
        unit_root(r1, n) * unit_root(r2, n)
    });
    total / phi as f64
}

/// `(1/n) Σ_{k<n} e(mk/n)` by direct summation.
pub fn weyl_sum_full(n: u64, m: i64) -> Complex64 {
    assert!(n >= 1, "weyl_sum_full needs n ≥ 1");
    let r = reduce_i128(m as i128, n);
    let total = par::sum_indexed(Exec::Sequential, n as usize, |k| {
        unit_root((r as u128 * k as u128 % n as u128) as u64, n)
    });
    total / n as f64
}

/// `1` if `n | m`, else `0`.
pub fn weyl_closed_form(n: u64, m: i64) -> f64 {
    if m.unsigned_abs() % n == 0 {
        1.0
    } else {
        0.0
    }
}

/// `(1/n) Σ_{k<n} e(mk/n)` for every `m mod n` at once, via one DFT of the
/// constant sequence.
pub fn weyl_sums_batched(planner: &mut FftPlanner<f64>, n: u64) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(1.0, 0.0); n as usize];
    planner.plan_fft_inverse(n as usize).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Integer matrix of size 1 or 2, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntMatrix(pub Vec<Vec<i64>>);

impl IntMatrix {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    fn validate(&self) -> Result<()> {
        let k = self.dim();
        if !(k == 1 || k == 2) || self.0.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidArgument("toral maps must be 1×1 or 2×2".into()));
        }
        Ok(())
    }

    /// Largest and smallest eigenvalue modulus.
    pub fn eigen_moduli(&self) -> (f64, f64) {
        let a = &self.0;
        if a.len() == 1 {
            let v = (a[0][0] as f64).abs();
            return (v, v);
        }
        let (p, q, r, s) = (a[0][0] as f64, a[0][1] as f64, a[1][0] as f64, a[1][1] as f64);
        let (tr, det) = (p + s, p * s - q * r);
        let disc = tr * tr - 4.0 * det;
        if disc >= 0.0 {
            let root = disc.sqrt();
            let (l1, l2) = (((tr + root) / 2.0).abs(), ((tr - root) / 2.0).abs());
            (l1.max(l2), l1.min(l2))
        } else {
            let m = det.abs().sqrt();
            (m, m)
        }
    }

    pub fn is_expanding(&self) -> bool {
        self.eigen_moduli().1 > 1.0
    }
}

/// `⟨e_{m_in} ∘ T_A^N, e_{m_out}⟩` on the torus: `1` iff `(Aᵀ)^N m_in = m_out`.
pub fn toral_correlation(a: &IntMatrix, m_in: &[i64], m_out: &[i64], iterations: u32) -> Result<f64> {
    a.validate()?;
    if m_in.len() != a.dim() || m_out.len() != a.dim() {
        return Err(Error::InvalidArgument("frequency vectors must match the matrix size".into()));
    }
    if !a.is_expanding() {
        return Err(Error::NotExpanding(format!("{:?}", a.0)));
    }
    let k = a.dim();
    let mut freq: Vec<BigInt> = m_in.iter().map(|&x| BigInt::from(x)).collect();
    for _ in 0..iterations {
        freq = (0..k)
            .map(|j| (0..k).map(|i| BigInt::from(a.0[i][j]) * &freq[i]).sum())
            .collect();
    }
    let target: Vec<BigInt> = m_out.iter().map(|&x| BigInt::from(x)).collect();
    Ok(if freq == target { 1.0 } else { 0.0 })
}

/// One-step correlation as an average over the grid `(L⁻¹Z/Z)^k`, applying
/// `A` to grid points. Exact once `L` exceeds every entry of `Aᵀm_in − m_out`.
pub fn toral_correlation_grid(a: &IntMatrix, m_in: &[i64], m_out: &[i64], level: u64) -> Result<f64> {
    a.validate()?;
    if m_in.len() != a.dim() || m_out.len() != a.dim() || level == 0 {
        return Err(Error::InvalidArgument("frequency vectors must match the matrix size".into()));
    }
    let k = a.dim();
    let points = (level as usize).pow(k as u32);
    let total = par::sum_indexed(Exec::default(), points, |idx| {
        let x: Vec<i128> = (0..k).map(|i| ((idx / (level as usize).pow(i as u32)) % level as usize) as i128).collect();
        let phase: i128 = (0..k)
            .map(|i| {
                let ax: i128 = (0..k).map(|j| a.0[i][j] as i128 * x[j]).sum();
                m_in[i] as i128 * ax - m_out[i] as i128 * x[i]
            })
            .sum();
        unit_root(reduce_i128(phase, level), level)
    });
    Ok(total.re / points as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyResult {
    pub n: u64,
    pub beta: f64,
    pub d: u64,
    pub m: i64,
    pub l2_value: f64,
    pub closed_form: f64,
    pub prime_count: usize,
}

impl DiscrepancyResult {
    pub const CSV_HEADER: &'static str = "n,beta,d,m,prime_count,l2_value,closed_form";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.n, self.beta, self.d, self.m, self.prime_count, self.l2_value, self.closed_form
        )
    }
}

/// Squared `L²` norm of the discrepancy operator applied to `e_m`.
///
/// `D e_m = π⁻¹ Σ_p e_{m p^{2d}}` has zero mean, so its squared norm is the
/// number of coinciding frequency pairs divided by `π²`.
pub fn discrepancy_l2(n: u64, beta: f64, d: u64, m: i64) -> Result<DiscrepancyResult> {
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::InvalidArgument(format!("beta = {beta} must lie in (0, 1/2)")));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("frequency m must be nonzero".into()));
    }
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument("n and d must be positive".into()));
    }
    let cutoff = (beta * (n as f64).ln()).exp();
    let primes = primes_coprime(n, cutoff);
    if primes.is_empty() {
        return Err(Error::NoPrimesAvailable { modulus: n, cutoff });
    }
    let mut freqs: Vec<BigInt> = primes
        .primes
        .iter()
        .map(|&p| BigInt::from(m) * BigInt::from(p).pow((2 * d) as u32))
        .collect();
    freqs.sort();
    let mut collisions = 0usize;
    let mut i = 0;
    while i < freqs.len() {
        let j = i + freqs[i..].iter().take_while(|f| **f == freqs[i]).count();
        collisions += (j - i) * (j - i);
        i = j;
    }
    let count = primes.count();
    let pi = count as f64;
    Ok(DiscrepancyResult {
        n,
        beta,
        d,
        m,
        l2_value: collisions as f64 / (pi * pi),
        closed_form: 1.0 / pi,
        prime_count: count,
    })
}

/// Errors below this are treated as exact zeros.
pub const ERROR_FLOOR: f64 = 1e-15;

/// Least squares for `log e = c − κ log n`; returns `(κ, RMS residual)`.
pub fn rate_fit(n_values: &[f64], errors: &[f64]) -> Result<(f64, f64)> {
    if n_values.len() != errors.len() {
        return Err(Error::InvalidArgument("n_values and errors differ in length".into()));
    }
    let pts: Vec<(f64, f64)> = n_values
        .iter()
        .zip(errors)
        .filter(|(&n, &e)| n > 0.0 && e >= ERROR_FLOOR && e.is_finite())
        .map(|(&n, &e)| (n.ln(), e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(pts.len()));
    }
    let len = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / len;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("rate fit needs at least two distinct n".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok((-slope, (rss / len).sqrt()))
}

/// Fraction of samples whose invariant height exceeds `t`.
pub fn cusp_mass(samples: &[HorocycleSample], t: f64) -> Result<f64> {
    cusp_mass_with(Exec::default(), samples, t)
}

pub fn cusp_mass_with(exec: Exec, samples: &[HorocycleSample], t: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySet);
    }
    let above: Vec<Result<bool>> = par::map_slice(exec, samples, |s| Ok(s.height()? > t));
    let count = above.into_iter().collect::<Result<Vec<_>>>()?.into_iter().filter(|&b| b).count();
    Ok(count as f64 / samples.len() as f64)
}

/// `(φ(n)/n, φ(n)·log log n / n)`.
pub fn primitive_density(n: u64) -> Result<(f64, f64)> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("primitive_density needs n ≥ 3, got {n}")));
    }
    let ratio = totient_u64(n) as f64 / n as f64;
    Ok((ratio, ratio * (n as f64).ln().ln()))
}

/// Equidistribution of one observable along a schedule of `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquidistReport {
    pub spec: PointSetSpec,
    pub observable: Observable,
    pub description: String,
    pub n_values: Vec<u64>,
    pub sizes: Vec<usize>,
    pub empirical: Vec<Complex64>,
    pub haar: f64,
    pub errors: Vec<f64>,
    pub fitted_kappa: Option<f64>,
    pub fit_residual: Option<f64>,
}

impl EquidistReport {
    pub const CSV_HEADER: &'static str = "n,empirical_re,empirical_im,haar,abs_error";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for ((n, e), err) in self.n_values.iter().zip(&self.empirical).zip(&self.errors) {
            writeln!(out, "{n},{},{},{},{err}", e.re, e.im, self.haar).expect("string write");
        }
        out
    }

    /// Errors that take part in the rate fit.
    pub fn fit_threshold(&self) -> f64 {
        10.0 * f64::EPSILON * self.haar.abs()
    }

    /// Computes errors against the Haar target and fits the decay rate.
    pub fn assemble(
        spec: PointSetSpec,
        observable: Observable,
        n_values: Vec<u64>,
        sizes: Vec<usize>,
        empirical: Vec<Complex64>,
    ) -> EquidistReport {
        let haar = haar_expectation(&observable).value;
        let errors = empirical.iter().map(|e| (e - haar).norm()).collect();
        let mut report = EquidistReport {
            spec,
            description: observable.to_string(),
            observable,
            n_values,
            sizes,
            empirical,
            haar,
            errors,
            fitted_kappa: None,
            fit_residual: None,
        };
        let threshold = report.fit_threshold();
        let (ns, es): (Vec<f64>, Vec<f64>) = report
            .n_values
            .iter()
            .zip(&report.errors)
            .filter(|(_, &e)| e >= threshold)
            .map(|(&n, &e)| (n as f64, e))
            .unzip();
        if let Ok((kappa, residual)) = rate_fit(&ns, &es) {
            report.fitted_kappa = Some(kappa);
            report.fit_residual = Some(residual);
        }
        report
    }
}

/// Builds reports for several observables over the same point sets.
///
/// `template` supplies every spec field except `n`.
pub fn equidist_reports(
    exec: Exec,
    template: &PointSetSpec,
    observables: &[Observable],
    n_values: &[u64],
) -> Result<Vec<EquidistReport>> {
    if n_values.is_empty() {
        return Err(Error::InvalidArgument("empty n schedule".into()));
    }
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("n schedule must be strictly increasing".into()));
    }
    let mut per_n = Vec::with_capacity(n_values.len());
    let mut sizes = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let spec = PointSetSpec { n, ..template.clone() };
        let samples = generate_with(&spec, exec)?;
        sizes.push(samples.len());
        per_n.push(empirical_averages_with(exec, &samples, observables)?);
    }
    Ok(observables
        .iter()
        .enumerate()
        .map(|(j, obs)| {
            let empirical = per_n.iter().map(|row| row[j]).collect();
            EquidistReport::assemble(template.clone(), obs.clone(), n_values.to_vec(), sizes.clone(), empirical)
        })
        .collect())
}

/// `gcd(m1, m2, n)`, the factor in the Weil bound.
pub fn weil_gcd(m1: i64, m2: i64, n: u64) -> u64 {
    gcd_u64(gcd_u64(m1.unsigned_abs(), m2.unsigned_abs()), n)
}
