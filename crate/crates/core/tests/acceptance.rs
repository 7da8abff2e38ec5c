//! Acceptance gate: one test per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test -p horopoints --test acceptance -- --nocapture` to
//! see the summary lines.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use horopoints::arith::{
    divisor_count, factorize_u64, gcd_u64, kloosterman_sum, reduce_i128, residue_count_formula, totient_u64, unit_root,
    units, Rational,
};
use horopoints::observables::{Observable, Profile};
use horopoints::par::Exec;
use horopoints::points::{gen_monomial, generate, project_level, verify_invariance, PointSetSpec};
use horopoints::sl2::verify_intersection;
use horopoints::stats::{
    cusp_mass, discrepancy_l2, empirical_averages_with, equidist_reports, kloosterman_average, rate_fit,
    toral_correlation, weyl_closed_form, weyl_sum_full, weyl_sums_batched, IntMatrix,
};
use horopoints::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

const PRIMES: [u64; 4] = [1009, 10007, 100003, 1000003];

fn half() -> Rational {
    Rational::new(1, 2).unwrap()
}

fn verdict(id: u32, name: &str, ok: bool, detail: String, started: Instant, limit: Duration) {
    let elapsed = started.elapsed();
    let in_time = elapsed <= limit;
    let status = if ok && in_time { "PASS" } else { "FAIL" };
    println!(
        "criterion {id:>2} [{name}]: {status} ({detail}; {:.2}s of {}s allowed)",
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    assert!(ok, "criterion {id} failed: {detail}");
    assert!(in_time, "criterion {id} exceeded its time limit: {elapsed:?}");
}

#[test]
fn criterion_01_kloosterman_identity() {
    let started = Instant::now();
    let freqs: Vec<(i64, i64)> = (-2..=2).flat_map(|a| (-2..=2).map(move |b| (a, b))).collect();
    let obs: Vec<Observable> = freqs.iter().map(|&(m1, m2)| Observable::TwoTorusChar { m1, m2 }).collect();
    let (mut worst_identity, mut worst_weil_ratio) = (0.0f64, 0.0f64);
    let mut failures = Vec::new();
    for n in 1..=2000u64 {
        let samples = generate(&PointSetSpec::triple(n, 1, 1, 1, 1)).unwrap();
        let averages = empirical_averages_with(Exec::default(), &samples, &obs).unwrap();
        let phi = totient_u64(n) as f64;
        for (&(m1, m2), avg) in freqs.iter().zip(averages) {
            let exact = kloosterman_sum(m1, m2, n) / phi;
            let err = (avg - exact).norm().max((avg - kloosterman_average(n, m1, m2)).norm());
            worst_identity = worst_identity.max(err);
            if err > 1e-9 {
                failures.push(format!("identity n={n} m=({m1},{m2}) err={err:e}"));
            }
            if (m1, m2) != (0, 0) {
                let g = gcd_u64(gcd_u64(m1.unsigned_abs(), m2.unsigned_abs()), n) as f64;
                let bound = divisor_count(n) as f64 * (g * n as f64).sqrt() / phi;
                worst_weil_ratio = worst_weil_ratio.max(avg.norm() / bound);
                if avg.norm() > bound + 1e-12 {
                    failures.push(format!("weil n={n} m=({m1},{m2})"));
                }
            }
        }
    }
    verdict(
        1,
        "kloosterman identity",
        failures.is_empty(),
        format!(
            "max identity error {worst_identity:.1e}, max |avg|/weil {worst_weil_ratio:.3}, {} failures {:?}",
            failures.len(),
            failures.iter().take(3).collect::<Vec<_>>()
        ),
        started,
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_02_kloosterman_decay() {
    let started = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for n in [1009u64, 10007, 100003] {
        let v = kloosterman_average(n, 1, 1).norm();
        let bound = 2.0 * (n as f64).sqrt() / (n - 1) as f64;
        ok &= v <= bound;
        detail.push(format!("n={n}: {v:.5} ≤ {bound:.5}"));
        if n == 1009 {
            ok &= v <= 0.07;
        }
    }
    verdict(2, "kloosterman decay", ok, detail.join(", "), started, Duration::from_secs(60));
}

#[test]
fn criterion_03_intersection_witness() {
    let started = Instant::now();
    let mut checked = 0usize;
    let mut failures = Vec::new();
    for n in 1..=1000u64 {
        for k in units(n) {
            checked += 1;
            if !verify_intersection(k as i64, n).unwrap() {
                failures.push((k, n));
            }
        }
    }
    verdict(
        3,
        "intersection witness",
        failures.is_empty(),
        format!("{checked} pairs, failures {:?}", failures.iter().take(5).collect::<Vec<_>>()),
        started,
        Duration::from_secs(30),
    );
}

/// Distinct `k^d mod n` over units, by repeated multiplication.
fn brute_count(n: u64, d: u64) -> u64 {
    let mut seen = vec![false; n as usize];
    for k in (0..n).filter(|&k| gcd_u64(k, n) == 1) {
        let mut r = 1 % n;
        for _ in 0..d {
            r = r * k % n;
        }
        seen[r as usize] = true;
    }
    seen.iter().filter(|&&b| b).count() as u64
}

/// Image size of `x ↦ x^d` on `(Z/p^r)^×` from its cyclic decomposition.
fn prime_power_count(p: u64, r: u32, d: u64) -> u64 {
    let phi = (p - 1) * p.pow(r - 1);
    if p != 2 {
        return phi / gcd_u64(phi, d);
    }
    match r {
        1 => 1,
        _ if d % 2 == 1 => phi,
        _ => phi / (2 * gcd_u64(1 << (r - 2), d)),
    }
}

#[test]
fn criterion_04_residue_cardinalities() {
    let started = Instant::now();
    let mut failures = Vec::new();
    for n in 1..=2000u64 {
        for d in 1..=12u64 {
            let generated = gen_monomial(&PointSetSpec::monomial(n, d, 1, 1)).unwrap().len() as u64;
            let formula = residue_count_formula(n, d);
            let brute = brute_count(n, d);
            if generated != formula || formula != brute {
                failures.push(format!("n={n} d={d}: gen {generated} formula {formula} brute {brute}"));
            }
        }
    }
    let mut prime_powers = 0;
    for q in 2..=3000u64 {
        let f = factorize_u64(q);
        if f.len() != 1 {
            continue;
        }
        let (p, r) = f[0];
        prime_powers += 1;
        for d in 1..=12u64 {
            let expect = prime_power_count(p, r, d);
            let (formula, brute) = (residue_count_formula(q, d), brute_count(q, d));
            if formula != expect || brute != expect {
                failures.push(format!("{p}^{r} d={d}: formula {formula} brute {brute} expected {expect}"));
            }
        }
    }
    verdict(
        4,
        "monomial residue counts",
        failures.is_empty(),
        format!("24000 (n, d) pairs and {prime_powers} prime powers, failures {:?}", failures.iter().take(3).collect::<Vec<_>>()),
        started,
        Duration::from_secs(120),
    );
}

#[test]
fn criterion_05_triple_invariance() {
    let started = Instant::now();
    let mut checked = 0usize;
    let mut failures = Vec::new();
    for p in [2u64, 3, 5] {
        for d in 1..=4u64 {
            for n in (1..=5000u64).filter(|n| n % p != 0) {
                checked += 1;
                if !verify_invariance(&PointSetSpec::triple(n, d, 1, 1, 1), p).unwrap() {
                    failures.push((n, d, p));
                }
            }
        }
    }
    verdict(
        5,
        "triple invariance",
        failures.is_empty(),
        format!("{checked} specs, failures {:?}", failures.iter().take(5).collect::<Vec<_>>()),
        started,
        Duration::from_secs(120),
    );
}

#[test]
fn criterion_06_cusp_mass_half() {
    let started = Instant::now();
    let samples = generate(&PointSetSpec::primitive(1_000_003, half())).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for t in [2.0, 4.0, 8.0] {
        let mass = cusp_mass(&samples, t).unwrap();
        let expect = 3.0 / (PI * t);
        let rel = (mass - expect).abs() / expect;
        ok &= rel <= 0.15;
        detail.push(format!("T={t}: {mass:.5} vs {expect:.5} (rel {rel:.4})"));
    }
    verdict(6, "cusp mass at alpha 1/2", ok, detail.join(", "), started, Duration::from_secs(120));
}

#[test]
fn criterion_07_cusp_escape() {
    let started = Instant::now();
    let alpha = Rational::new(5, 4).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for n in [10007u64, 100003] {
        let samples = generate(&PointSetSpec::primitive(n, alpha)).unwrap();
        let floor = (n as f64).sqrt();
        let min_height = samples.iter().map(|s| s.height().unwrap()).fold(f64::INFINITY, f64::min);
        let mass = cusp_mass(&samples, 10.0).unwrap();
        // heights on the boundary equal √n up to rounding in the reduction
        ok &= min_height >= floor * (1.0 - 1e-12) && mass == 1.0;
        detail.push(format!("n={n}: min height {min_height:.6} vs √n {floor:.6}, mass(10) {mass}"));
    }
    verdict(7, "cusp escape at alpha 5/4", ok, detail.join(", "), started, Duration::from_secs(60));
}

#[test]
fn criterion_08_equidistribution_trend() {
    let started = Instant::now();
    let kernel = Observable::kernel(1.0, Profile::SmoothBump);
    let obs = [kernel.clone(), Observable::product(vec![Observable::TorusChar { m: 1 }, kernel]).unwrap()];
    let mut ok = true;
    let mut detail = Vec::new();
    for d in [1u64, 2] {
        let reports = equidist_reports(Exec::default(), &PointSetSpec::monomial(1, d, 1, 1), &obs, &PRIMES).unwrap();
        for rep in reports {
            let e = &rep.errors;
            let trend = e[1] >= e[2] && e[2] >= e[3];
            let ns: Vec<f64> = rep.n_values.iter().map(|&n| n as f64).collect();
            let fit = rate_fit(&ns, e);
            let fit_ok = matches!(fit, Ok((k, r)) if k > 0.0 && r < 0.5);
            ok &= trend && fit_ok;
            detail.push(format!(
                "d={d} {}: errors [{}] κ̂,res {:?}",
                rep.description,
                e.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", "),
                fit.map(|(k, r)| (format!("{k:.3}"), format!("{r:.3}")))
            ));
        }
    }
    verdict(8, "equidistribution trend", ok, detail.join("; "), started, Duration::from_secs(600));
}

#[test]
fn criterion_09_weyl_exactness() {
    let started = Instant::now();
    let mut planner = FftPlanner::new();
    let mut worst = 0.0f64;
    for n in 1..=10_000u64 {
        let sums = weyl_sums_batched(&mut planner, n);
        let span = 2 * n as i64;
        for m in -span..=span {
            let v = sums[reduce_i128(m as i128, n) as usize];
            worst = worst.max((v - weyl_closed_form(n, m)).norm());
        }
    }
    // the batched values are spot-checked against term-by-term summation
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_direct = 0.0f64;
    for _ in 0..400 {
        let n = rng.gen_range(1..=10_000u64);
        let m = rng.gen_range(-(2 * n as i64)..=2 * n as i64);
        worst_direct = worst_direct.max((weyl_sum_full(n, m) - weyl_closed_form(n, m)).norm());
        let batched = weyl_sums_batched(&mut planner, n)[reduce_i128(m as i128, n) as usize];
        worst_direct = worst_direct.max((batched - weyl_sum_full(n, m)).norm());
    }
    verdict(
        9,
        "weyl sum exactness",
        worst <= 1e-10 && worst_direct <= 1e-10,
        format!("max batched error {worst:.1e}, max direct error {worst_direct:.1e}"),
        started,
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_10_discrepancy() {
    let started = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for beta in [0.2, 0.4] {
        for d in [1u64, 2] {
            for m in [1i64, 5] {
                let values: Vec<_> = PRIMES.iter().map(|&n| discrepancy_l2(n, beta, d, m).unwrap()).collect();
                for r in &values {
                    ok &= (r.l2_value - r.closed_form).abs() <= 1e-9;
                }
                ok &= values.windows(2).all(|w| w[1].l2_value < w[0].l2_value);
                if d == 1 && m == 1 {
                    let counts: Vec<_> = values.iter().map(|r| r.prime_count).collect();
                    detail.push(format!("β={beta}: prime counts {counts:?}"));
                }
            }
        }
    }
    verdict(10, "discrepancy operator", ok, detail.join(", "), started, Duration::from_secs(60));
}

/// Correlation as an exact average over the `level`-grid, applying `A` to
/// points rather than transposing frequencies.
fn grid_correlation(a: &IntMatrix, m_in: &[i64], m_out: &[i64], level: i64) -> f64 {
    let k = a.dim();
    let mut total = Complex64::new(0.0, 0.0);
    let mut count = 0usize;
    let mut visit = |x: &[i64]| {
        let ax: Vec<i64> = (0..k).map(|i| (0..k).map(|j| a.0[i][j] * x[j]).sum()).collect();
        let phase: i64 = (0..k).map(|i| m_in[i] * ax[i] - m_out[i] * x[i]).sum();
        total += unit_root(reduce_i128(phase as i128, level as u64), level as u64);
        count += 1;
    };
    if k == 1 {
        (0..level).for_each(|x| visit(&[x]));
    } else {
        (0..level).for_each(|x| (0..level).for_each(|y| visit(&[x, y])));
    }
    total.re / count as f64
}

#[test]
fn criterion_11_toral_mixing() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cat = IntMatrix(vec![vec![3, 1], vec![1, 2]]);
    let mut instances = vec![(cat.clone(), vec![1, 0], vec![3, 1]), (cat, vec![1, 0], vec![3, 2])];
    while instances.len() < 1000 {
        let k = rng.gen_range(1..=2usize);
        let a = IntMatrix((0..k).map(|_| (0..k).map(|_| rng.gen_range(-10..=10)).collect()).collect());
        if !a.is_expanding() {
            continue;
        }
        let m_in: Vec<i64> = (0..k).map(|_| rng.gen_range(-10..=10)).collect();
        let image: Vec<i64> = (0..k).map(|j| (0..k).map(|i| a.0[i][j] * m_in[i]).sum()).collect();
        let m_out = if rng.gen_bool(0.5) {
            image
        } else {
            image.iter().map(|&x| x + rng.gen_range(-2..=2)).collect()
        };
        instances.push((a, m_in, m_out));
    }
    let mut mismatches = 0;
    let mut matched = 0;
    for (a, m_in, m_out) in &instances {
        let fast = toral_correlation(a, m_in, m_out, 1).unwrap();
        // a grid finer than every frequency difference makes the average exact
        let spread = (0..a.dim())
            .map(|i| {
                let ami: i64 = (0..a.dim()).map(|j| a.0[j][i] * m_in[j]).sum();
                (ami - m_out[i]).abs()
            })
            .max()
            .unwrap();
        let oracle = grid_correlation(a, m_in, m_out, spread + 1);
        if (fast - oracle).abs() > 1e-9 {
            mismatches += 1;
        }
        matched += (fast == 1.0) as usize;
    }
    verdict(
        11,
        "toral character mixing",
        mismatches == 0,
        format!("{} instances, {matched} matching frequencies, {mismatches} mismatches", instances.len()),
        started,
        Duration::from_secs(10),
    );
}

#[test]
fn criterion_12_level_projection() {
    let started = Instant::now();
    let place_sets: [&[u64]; 4] = [&[], &[2], &[3], &[2, 3]];
    let mut cases = 0;
    let mut failures = Vec::new();
    for n in [5u64, 7, 11, 25] {
        for places in place_sets {
            let k = places.len() as u32;
            let combos = 3u32.pow(k);
            for li in 0..combos {
                for mi in 0..combos {
                    let digits = |mut v: u32| -> Vec<u32> {
                        (0..k)
                            .map(|_| {
                                let d = v % 3;
                                v /= 3;
                                d
                            })
                            .collect()
                    };
                    let (l, m) = (digits(li), digits(mi));
                    let proj = project_level(n, places, &l, &m).unwrap();
                    cases += 1;
                    let distinct: BTreeSet<_> = proj.pairs.iter().collect();
                    if !proj.paths_agree || distinct.len() != proj.pairs.len() {
                        failures.push(format!("n={n} S={places:?} l={l:?} m={m:?}"));
                    }
                }
            }
        }
    }
    verdict(
        12,
        "level projection",
        failures.is_empty(),
        format!("{cases} cases, failures {failures:?}"),
        started,
        Duration::from_secs(10),
    );
}
