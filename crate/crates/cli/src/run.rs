//! Experiment execution, payload writing and manifests.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use horopoints::arith::{
    gcd_u64, kloosterman_sum, reduce_i128, residue_count_formula, residue_set, totient_u64, units, weil_bound,
    Residue,
};
use horopoints::par::Exec;
use horopoints::points::{generate_with, project_level, verify_invariance_with, Family, HorocycleSample};
use horopoints::sl2::verify_intersection;
use horopoints::stats::{
    cusp_mass_with, discrepancy_l2, empirical_averages_with, kloosterman_average, toral_correlation,
    toral_correlation_grid, weyl_closed_form, weyl_sum_full, weyl_sums_batched, DiscrepancyResult, EquidistReport,
    IntMatrix, WeylPlanner,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ExperimentKind, SpecTemplate, SCHEMA_VERSION};
use crate::HarnessError;

/// One CSV table of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub suffix: Option<String>,
    pub header: String,
    pub rows: Vec<String>,
}

impl Table {
    fn new(suffix: Option<String>, header: &str) -> Self {
        Table { suffix, header: header.to_string(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.header.len() + 32 * self.rows.len());
        out.push_str(&self.header);
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        out
    }
}

/// A pass/fail statement about a run. Hard checks are exact identities and
/// decide the exit status; soft checks are statistical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub hard: bool,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn hard(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), hard: true, passed, detail: detail.into() }
    }

    fn soft(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), hard: false, passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub n: u64,
    pub seconds: f64,
}

/// Everything an experiment produced, before anything is written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub payload: Value,
    pub checks: Vec<Check>,
    pub timings: Vec<Timing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub experiment: ExperimentKind,
    pub name: String,
    pub config_hash: String,
    pub outputs: Vec<String>,
    pub timings: Vec<Timing>,
    pub checks: Vec<Check>,
    pub hard_failures: usize,
    pub soft_failures: usize,
}

impl RunManifest {
    pub fn passed_hard(&self) -> bool {
        self.hard_failures == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Runs the experiment and writes its payloads and manifest into `out_dir`.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path, format: Option<Format>) -> Result<RunManifest, HarnessError> {
    cfg.validate()?;
    let outcome = execute(cfg)?;
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let name = cfg.name();
    let mut outputs = Vec::new();
    if format != Some(Format::Json) {
        for t in &outcome.tables {
            let file = match &t.suffix {
                Some(s) => format!("{name}_{s}.csv"),
                None => format!("{name}.csv"),
            };
            write_file(&out_dir.join(&file), t.to_csv().as_bytes())?;
            outputs.push(file);
        }
    }
    if format != Some(Format::Csv) {
        let file = format!("{name}.json");
        let mut text = serde_json::to_string_pretty(&outcome.payload)?;
        text.push('\n');
        write_file(&out_dir.join(&file), text.as_bytes())?;
        outputs.push(file);
    }
    let hard_failures = outcome.checks.iter().filter(|c| c.hard && !c.passed).count();
    let soft_failures = outcome.checks.iter().filter(|c| !c.hard && !c.passed).count();
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: cfg.experiment,
        name: name.clone(),
        config_hash: cfg.hash(),
        outputs,
        timings: outcome.timings,
        checks: outcome.checks,
        hard_failures,
        soft_failures,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_file(&out_dir.join(format!("{name}.manifest.json")), text.as_bytes())?;
    Ok(manifest)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

/// Default output directory: the config's, else `HOROPOINTS_OUT_DIR`, else `out`.
pub fn resolve_out_dir(cli: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    cli.or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(crate::OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Computes an experiment without touching the filesystem.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let ns = cfg.schedule.values()?;
    let exec = Exec::default();
    match cfg.experiment {
        ExperimentKind::Generate => generate(cfg, &ns, exec),
        ExperimentKind::Equidist => equidist(cfg, &ns, exec),
        ExperimentKind::Kloosterman => kloosterman(cfg, &ns, exec),
        ExperimentKind::Invariance => invariance(cfg, &ns, exec),
        ExperimentKind::Cardinality => cardinality(cfg, &ns, exec),
        ExperimentKind::Discrepancy => discrepancy(cfg, &ns),
        ExperimentKind::CuspMass => cusp(cfg, &ns, exec),
        ExperimentKind::Projection => projection(cfg, &ns),
        ExperimentKind::Intersection => intersection(&ns),
        ExperimentKind::Weyl => weyl(cfg, &ns),
        ExperimentKind::Mixing => mixing(cfg, &ns),
    }
}

fn spec_of(cfg: &ExperimentConfig) -> Result<&SpecTemplate, HarnessError> {
    cfg.spec
        .as_ref()
        .ok_or_else(|| HarnessError::ConfigInvalid(format!("{} needs a spec", cfg.experiment.name())))
}

/// Runs `f` and records its wall-clock time against `n`.
fn timed<T>(timings: &mut Vec<Timing>, n: u64, f: impl FnOnce() -> T) -> T {
    let started = Instant::now();
    let out = f();
    timings.push(Timing { n, seconds: started.elapsed().as_secs_f64() });
    out
}

/// Expected set size for a generated spec.
fn expected_size(spec: &horopoints::points::PointSetSpec) -> u64 {
    match (spec.family, spec.primitive) {
        (Family::Full, false) => spec.n,
        (Family::Full, true) => totient_u64(spec.n),
        _ => residue_count_formula(spec.n, spec.d),
    }
}

const SAMPLE_HEADER: &str = "k,n,alpha,d,torus1,torus2,re_z,im_z,height";

fn generate(cfg: &ExperimentConfig, ns: &[u64], exec: Exec) -> Result<Outcome, HarnessError> {
    let template = spec_of(cfg)?;
    let (mut tables, mut payload, mut timings) = (Vec::new(), Vec::new(), Vec::new());
    let mut size_failures = Vec::new();
    for &n in ns {
        let spec = template.at(n);
        let (samples, heights) = timed(&mut timings, n, || -> Result<_, HarnessError> {
            let samples = generate_with(&spec, exec)?;
            let heights: Vec<f64> = horopoints::par::map_slice(exec, &samples, HorocycleSample::height)
                .into_iter()
                .collect::<Result<_, _>>()?;
            Ok((samples, heights))
        })?;
        if samples.len() as u64 != expected_size(&spec) {
            size_failures.push(n);
        }
        let mut table = Table::new(Some(format!("n{n}")), SAMPLE_HEADER);
        let mut rows = Vec::with_capacity(samples.len());
        let alpha = spec.effective_alpha();
        for (s, h) in samples.iter().zip(&heights) {
            let torus2 = s.torus2.map(|t| t.to_string()).unwrap_or_default();
            table.rows.push(format!(
                "{},{n},{alpha},{},{},{torus2},{},{},{h}",
                s.residue.value(),
                spec.d,
                s.torus1,
                s.xpoint.z.re,
                s.xpoint.z.im
            ));
            rows.push(json!({
                "k": s.residue.value(),
                "torus1": s.torus1.to_string(),
                "torus2": s.torus2.map(|t| t.to_string()),
                "re_z": s.xpoint.z.re,
                "im_z": s.xpoint.z.im,
                "height": h,
            }));
        }
        tables.push(table);
        payload.push(json!({ "n": n, "spec": spec, "size": samples.len(), "samples": rows }));
    }
    let checks = vec![Check::hard(
        "set sizes match the residue-count formula",
        size_failures.is_empty(),
        format!("mismatches at n = {size_failures:?}"),
    )];
    Ok(Outcome { tables, payload: Value::Array(payload), checks, timings })
}

fn equidist(cfg: &ExperimentConfig, ns: &[u64], exec: Exec) -> Result<Outcome, HarnessError> {
    let template = spec_of(cfg)?;
    let ds = cfg.params.d_values.clone().unwrap_or_else(|| vec![template.d]);
    let (mut reports, mut timings) = (Vec::new(), Vec::new());
    for &d in &ds {
        let mut sizes = Vec::new();
        let mut per_n = Vec::new();
        for &n in ns {
            let spec = horopoints::points::PointSetSpec { d, ..template.at(n) };
            let averages = timed(&mut timings, n, || -> Result<_, HarnessError> {
                let samples = generate_with(&spec, exec)?;
                sizes.push(samples.len());
                Ok(empirical_averages_with(exec, &samples, &cfg.observables)?)
            })?;
            per_n.push(averages);
        }
        let spec = horopoints::points::PointSetSpec { d, ..template.at(ns[0]) };
        for (j, obs) in cfg.observables.iter().enumerate() {
            let empirical = per_n.iter().map(|row| row[j]).collect();
            reports.push(EquidistReport::assemble(spec.clone(), obs.clone(), ns.to_vec(), sizes.clone(), empirical));
        }
    }
    let mut tables = Vec::new();
    let mut checks = Vec::new();
    let per_d = cfg.observables.len();
    for (i, rep) in reports.iter().enumerate() {
        let suffix = format!("d{}_obs{}", rep.spec.d, i % per_d);
        tables.push(Table {
            suffix: Some(suffix),
            header: EquidistReport::CSV_HEADER.to_string(),
            rows: rep.to_csv().lines().skip(1).map(str::to_string).collect(),
        });
        checks.push(Check::hard(
            format!("errors are finite and non-negative (d={}, {})", rep.spec.d, rep.description),
            rep.errors.iter().all(|e| e.is_finite() && *e >= 0.0),
            "",
        ));
        if let Some(tc) = &cfg.params.checks {
            let label = format!("d={}, {}", rep.spec.d, rep.description);
            let e = &rep.errors;
            if tc.non_increasing_after_first {
                let ok = e.iter().skip(1).collect::<Vec<_>>().windows(2).all(|w| w[0] >= w[1]);
                checks.push(Check::soft(format!("errors non-increasing after the first n ({label})"), ok, format!("{e:?}")));
            }
            let fit = format!("kappa = {:?}, residual = {:?}", rep.fitted_kappa, rep.fit_residual);
            if let Some(min) = tc.min_kappa {
                let ok = rep.fitted_kappa.is_some_and(|k| k > min);
                checks.push(Check::soft(format!("fitted kappa > {min} ({label})"), ok, fit.clone()));
            }
            if let Some(max) = tc.max_residual {
                let ok = rep.fit_residual.is_some_and(|r| r < max);
                checks.push(Check::soft(format!("fit residual < {max} ({label})"), ok, fit.clone()));
            }
        }
    }
    Ok(Outcome { tables, payload: serde_json::to_value(&reports)?, checks, timings })
}

fn kloosterman(cfg: &ExperimentConfig, ns: &[u64], exec: Exec) -> Result<Outcome, HarnessError> {
    let pairs: Vec<(i64, i64)> = match &cfg.params.pairs {
        Some(p) => p.iter().map(|&[a, b]| (a, b)).collect(),
        None => {
            let m = cfg.params.m_max.unwrap_or(2);
            (-m..=m).flat_map(|a| (-m..=m).map(move |b| (a, b))).collect()
        }
    };
    let obs: Vec<_> = pairs
        .iter()
        .map(|&(m1, m2)| horopoints::observables::Observable::TwoTorusChar { m1, m2 })
        .collect();
    let mut table = Table::new(None, "n,m1,m2,empirical_re,empirical_im,exact_re,exact_im,weil_bound");
    let (mut payload, mut timings) = (Vec::new(), Vec::new());
    let (mut worst, mut weil_failures) = (0.0f64, Vec::new());
    for &n in ns {
        let averages = timed(&mut timings, n, || -> Result<_, HarnessError> {
            let samples = generate_with(&horopoints::points::PointSetSpec::triple(n, 1, 1, 1, 1), exec)?;
            Ok(empirical_averages_with(exec, &samples, &obs)?)
        })?;
        let phi = totient_u64(n) as f64;
        for (&(m1, m2), avg) in pairs.iter().zip(averages) {
            let exact = kloosterman_sum(m1, m2, n) / phi;
            worst = worst.max((avg - exact).norm()).max((avg - kloosterman_average(n, m1, m2)).norm());
            let bound = weil_bound(m1, m2, n) / phi;
            if (m1, m2) != (0, 0) && avg.norm() > bound + 1e-12 {
                weil_failures.push((n, m1, m2));
            }
            table.rows.push(format!("{n},{m1},{m2},{},{},{},{},{bound}", avg.re, avg.im, exact.re, exact.im));
            payload.push(json!({
                "n": n, "m1": m1, "m2": m2,
                "empirical": [avg.re, avg.im], "exact": [exact.re, exact.im], "weil_bound": bound,
            }));
        }
    }
    let checks = vec![
        Check::hard("triple average equals S(m1,m2;n)/phi(n) within 1e-9", worst <= 1e-9, format!("max error {worst:e}")),
        Check::hard("Weil bound", weil_failures.is_empty(), format!("violations {weil_failures:?}")),
    ];
    Ok(Outcome { tables: vec![table], payload: Value::Array(payload), checks, timings })
}

fn invariance(cfg: &ExperimentConfig, ns: &[u64], exec: Exec) -> Result<Outcome, HarnessError> {
    let template = spec_of(cfg)?;
    let primes = cfg.params.primes.clone().unwrap_or_else(|| vec![2, 3, 5]);
    let ds: Vec<u64> = match cfg.params.d_max {
        Some(m) => (1..=m).collect(),
        None => vec![template.d],
    };
    let mut table = Table::new(None, "n,p,d,size,invariant");
    let (mut payload, mut timings, mut failures) = (Vec::new(), Vec::new(), Vec::new());
    for &n in ns {
        timed(&mut timings, n, || -> Result<(), HarnessError> {
            for &p in primes.iter().filter(|&&p| gcd_u64(p, n) == 1) {
                for &d in &ds {
                    let spec = horopoints::points::PointSetSpec { d, ..template.at(n) };
                    let ok = verify_invariance_with(&spec, p, exec)?;
                    let size = expected_size(&spec);
                    if !ok {
                        failures.push((n, p, d));
                    }
                    table.rows.push(format!("{n},{p},{d},{size},{ok}"));
                    payload.push(json!({ "n": n, "p": p, "d": d, "size": size, "invariant": ok }));
                }
            }
            Ok(())
        })?;
    }
    let checks = vec![Check::hard(
        "sets are invariant under the times-p action",
        failures.is_empty(),
        format!("{} specs, failures {failures:?}", table.rows.len()),
    )];
    Ok(Outcome { tables: vec![table], payload: Value::Array(payload), checks, timings })
}

fn cardinality(cfg: &ExperimentConfig, ns: &[u64], exec: Exec) -> Result<Outcome, HarnessError> {
    let d_max = cfg.params.d_max.unwrap_or(12);
    let mut table = Table::new(None, "n,d,generated,formula,enumerated");
    let (mut payload, mut timings, mut failures) = (Vec::new(), Vec::new(), Vec::new());
    for &n in ns {
        timed(&mut timings, n, || -> Result<(), HarnessError> {
            for d in 1..=d_max {
                let generated = generate_with(&horopoints::points::PointSetSpec::monomial(n, d, 1, 1), exec)?.len() as u64;
                let formula = residue_count_formula(n, d);
                let enumerated = residue_set(n, d, Residue::new(1, n)?)?.len() as u64;
                if generated != formula || formula != enumerated {
                    failures.push((n, d));
                }
                table.rows.push(format!("{n},{d},{generated},{formula},{enumerated}"));
                payload.push(json!({ "n": n, "d": d, "generated": generated, "formula": formula, "enumerated": enumerated }));
            }
            Ok(())
        })?;
    }
    let checks = vec![Check::hard(
        "generated, predicted and enumerated counts agree",
        failures.is_empty(),
        format!("failures {failures:?}"),
    )];
    Ok(Outcome { tables: vec![table], payload: Value::Array(payload), checks, timings })
}

fn discrepancy(cfg: &ExperimentConfig, ns: &[u64]) -> Result<Outcome, HarnessError> {
    let betas = cfg.params.betas.clone().unwrap_or_else(|| vec![0.2, 0.4]);
    let ds = cfg.params.ds.clone().unwrap_or_else(|| vec![1, 2]);
    let ms = cfg.params.ms.clone().unwrap_or_else(|| vec![1, 5]);
    let mut table = Table::new(None, DiscrepancyResult::CSV_HEADER);
    let (mut results, mut timings) = (Vec::new(), Vec::new());
    let mut series: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for &n in ns {
        timed(&mut timings, n, || -> Result<(), HarnessError> {
            for &beta in &betas {
                for &d in &ds {
                    for &m in &ms {
                        let r = discrepancy_l2(n, beta, d, m)?;
                        table.rows.push(r.csv_row());
                        series.entry(format!("beta={beta} d={d} m={m}")).or_default().push(r.l2_value);
                        results.push(r);
                    }
                }
            }
            Ok(())
        })?;
    }
    let worst = results.iter().map(|r| (r.l2_value - r.closed_form).abs()).fold(0.0, f64::max);
    let not_decreasing: Vec<&String> = series
        .iter()
        .filter(|(_, v)| v.windows(2).any(|w| w[1] >= w[0]))
        .map(|(k, _)| k)
        .collect();
    let checks = vec![
        Check::hard("L2 value equals 1/pi_n(n^beta) within 1e-9", worst <= 1e-9, format!("max error {worst:e}")),
        Check::soft("values strictly decrease in n", not_decreasing.is_empty(), format!("not decreasing: {not_decreasing:?}")),
    ];
    Ok(Outcome { tables: vec![table], payload: serde_json::to_value(&results)?, checks, timings })
}

fn cusp(cfg: &ExperimentConfig, ns: &[u64], exec: Exec) -> Result<Outcome, HarnessError> {
    let template = spec_of(cfg)?;
    let ts = cfg.params.t_values.clone().unwrap_or_else(|| vec![2.0, 4.0, 8.0]);
    let mut table = Table::new(None, "n,T,mass,haar_mass,rel_error,min_height");
    let (mut payload, mut timings, mut checks) = (Vec::new(), Vec::new(), Vec::new());
    for &n in ns {
        let spec = template.at(n);
        let alpha = spec.effective_alpha().to_f64();
        let (masses, min_height) = timed(&mut timings, n, || -> Result<_, HarnessError> {
            let samples = generate_with(&spec, exec)?;
            let heights: Vec<f64> = horopoints::par::map_slice(exec, &samples, HorocycleSample::height)
                .into_iter()
                .collect::<Result<_, _>>()?;
            let masses: Vec<f64> = ts.iter().map(|&t| cusp_mass_with(exec, &samples, t)).collect::<Result<_, _>>()?;
            Ok((masses, heights.iter().copied().fold(f64::INFINITY, f64::min)))
        })?;
        for (&t, &mass) in ts.iter().zip(&masses) {
            let haar = if t >= 1.0 { 3.0 / (PI * t) } else { f64::NAN };
            let rel = (mass - haar).abs() / haar;
            table.rows.push(format!("{n},{t},{mass},{haar},{rel},{min_height}"));
            payload.push(json!({ "n": n, "T": t, "mass": mass, "haar_mass": haar, "rel_error": rel, "min_height": min_height }));
            if let Some(tol) = cfg.params.rel_tolerance {
                checks.push(Check::soft(format!("cusp mass within {tol} of 3/(pi T) (n={n}, T={t})"), rel <= tol, format!("{mass} vs {haar}")));
            }
        }
        if alpha > 1.0 {
            // every sample sits at least as high as the cusp k/n allows
            let floor = (n as f64).powf(2.0 * alpha - 2.0);
            checks.push(Check::hard(
                format!("all heights >= n^(2 alpha - 2) (n={n})"),
                min_height >= floor * (1.0 - 1e-12),
                format!("min height {min_height} vs {floor}"),
            ));
            for (&t, &mass) in ts.iter().zip(&masses) {
                if t < floor {
                    checks.push(Check::hard(format!("cusp mass is 1 below the floor (n={n}, T={t})"), mass == 1.0, format!("{mass}")));
                }
            }
        }
    }
    Ok(Outcome { tables: vec![table], payload: Value::Array(payload), checks, timings })
}

fn projection(cfg: &ExperimentConfig, ns: &[u64]) -> Result<Outcome, HarnessError> {
    let place_sets = cfg.params.place_sets.clone().unwrap_or_else(|| vec![vec![], vec![2], vec![3], vec![2, 3]]);
    let max_e = cfg.params.max_exponent.unwrap_or(2);
    let mut table = Table::new(None, "n,places,l,m,pairs,paths_agree");
    let (mut payload, mut timings, mut failures) = (Vec::new(), Vec::new(), Vec::new());
    let join = |v: &[u64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
    for &n in ns {
        timed(&mut timings, n, || -> Result<(), HarnessError> {
            for places in &place_sets {
                let k = places.len() as u32;
                let combos = (max_e + 1).pow(k);
                let digits = |mut v: u32| -> Vec<u32> {
                    (0..k)
                        .map(|_| {
                            let d = v % (max_e + 1);
                            v /= max_e + 1;
                            d
                        })
                        .collect()
                };
                for li in 0..combos {
                    for mi in 0..combos {
                        let (l, m) = (digits(li), digits(mi));
                        let p = project_level(n, places, &l, &m)?;
                        if !p.paths_agree {
                            failures.push((n, places.clone(), l.clone(), m.clone()));
                        }
                        let (ls, ms): (Vec<u64>, Vec<u64>) = (l.iter().map(|&x| x as u64).collect(), m.iter().map(|&x| x as u64).collect());
                        table.rows.push(format!("{n},{},{},{},{},{}", join(places), join(&ls), join(&ms), p.pairs.len(), p.paths_agree));
                        payload.push(serde_json::to_value(&p)?);
                    }
                }
            }
            Ok(())
        })?;
    }
    let checks = vec![Check::hard("both projection routes agree", failures.is_empty(), format!("failures {failures:?}"))];
    Ok(Outcome { tables: vec![table], payload: Value::Array(payload), checks, timings })
}

fn intersection(ns: &[u64]) -> Result<Outcome, HarnessError> {
    let mut table = Table::new(None, "n,units,verified");
    let (mut payload, mut timings, mut failures) = (Vec::new(), Vec::new(), Vec::new());
    for &n in ns {
        timed(&mut timings, n, || -> Result<(), HarnessError> {
            let us = units(n);
            let mut verified = 0;
            for &k in &us {
                if verify_intersection(k as i64, n)? {
                    verified += 1;
                } else {
                    failures.push((n, k));
                }
            }
            table.rows.push(format!("{n},{},{verified}", us.len()));
            payload.push(json!({ "n": n, "units": us.len(), "verified": verified }));
            Ok(())
        })?;
    }
    let checks = vec![Check::hard("every witness verifies exactly", failures.is_empty(), format!("failures {failures:?}"))];
    Ok(Outcome { tables: vec![table], payload: Value::Array(payload), checks, timings })
}

fn weyl(cfg: &ExperimentConfig, ns: &[u64]) -> Result<Outcome, HarnessError> {
    let factor = cfg.params.m_factor.unwrap_or(2);
    let mut planner = WeylPlanner::new();
    let mut table = Table::new(None, "n,frequencies,max_error,max_direct_error");
    let (mut payload, mut timings) = (Vec::new(), Vec::new());
    let (mut worst, mut worst_direct) = (0.0f64, 0.0f64);
    for &n in ns {
        timed(&mut timings, n, || {
            let sums = weyl_sums_batched(&mut planner, n);
            let span = factor * n as i64;
            let mut err = 0.0f64;
            for m in -span..=span {
                err = err.max((sums[reduce_i128(m as i128, n) as usize] - weyl_closed_form(n, m)).norm());
            }
            // term-by-term sums at a few frequencies
            let mut direct = 0.0f64;
            for m in [0, 1, -1, n as i64 - 1, n as i64, span] {
                direct = direct.max((weyl_sum_full(n, m) - weyl_closed_form(n, m)).norm());
            }
            worst = worst.max(err);
            worst_direct = worst_direct.max(direct);
            table.rows.push(format!("{n},{},{err},{direct}", 2 * span + 1));
            payload.push(json!({ "n": n, "frequencies": 2 * span + 1, "max_error": err, "max_direct_error": direct }));
        });
    }
    let checks = vec![Check::hard(
        "Weyl sums match the 0/1 closed form within 1e-10",
        worst <= 1e-10 && worst_direct <= 1e-10,
        format!("batched {worst:e}, direct {worst_direct:e}"),
    )];
    Ok(Outcome { tables: vec![table], payload: Value::Array(payload), checks, timings })
}

/// Largest grid the mixing oracle will average over.
const MAX_GRID: u64 = 4_000_000;

fn mixing(cfg: &ExperimentConfig, ns: &[u64]) -> Result<Outcome, HarnessError> {
    let count = cfg.params.instances.unwrap_or(1000);
    let bound = cfg.params.max_entry.unwrap_or(10);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
    let mut table = Table::new(None, "iterations,dim,matrix,m_in,m_out,correlation,grid_correlation");
    let (mut payload, mut timings, mut mismatches) = (Vec::new(), Vec::new(), 0usize);
    let fmt = |v: &[i64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
    for &iters in ns {
        let mut instances = vec![(IntMatrix(vec![vec![3, 1], vec![1, 2]]), vec![1, 0])];
        while instances.len() < count {
            let k = rng.gen_range(1..=2usize);
            let a = IntMatrix((0..k).map(|_| (0..k).map(|_| rng.gen_range(-bound..=bound)).collect()).collect());
            if a.is_expanding() {
                instances.push((a, (0..k).map(|_| rng.gen_range(-bound..=bound)).collect()));
            }
        }
        timed(&mut timings, iters, || -> Result<(), HarnessError> {
            for (a, m_in) in instances {
                let power = matrix_power(&a, iters)?;
                let image: Vec<i64> = (0..a.dim()).map(|j| (0..a.dim()).map(|i| power.0[i][j] * m_in[i]).sum()).collect();
                let m_out: Vec<i64> = if rng.gen_bool(0.5) {
                    image.clone()
                } else {
                    image.iter().map(|&x| x + rng.gen_range(-2..=2)).collect()
                };
                let corr = toral_correlation(&a, &m_in, &m_out, iters as u32)?;
                let spread = image.iter().zip(&m_out).map(|(x, y)| (x - y).unsigned_abs()).max().unwrap_or(0);
                let level = spread + 1;
                if level.pow(a.dim() as u32) > MAX_GRID {
                    return Err(HarnessError::ResourceExhausted(format!("mixing grid of level {level} is too large")));
                }
                let grid = toral_correlation_grid(&power, &m_in, &m_out, level)?;
                if (corr - grid).abs() > 1e-9 {
                    mismatches += 1;
                }
                let flat: Vec<i64> = a.0.iter().flatten().copied().collect();
                table.rows.push(format!("{iters},{},{},{},{},{corr},{grid}", a.dim(), fmt(&flat), fmt(&m_in), fmt(&m_out)));
                payload.push(json!({ "iterations": iters, "matrix": a, "m_in": m_in, "m_out": m_out, "correlation": corr, "grid_correlation": grid }));
            }
            Ok(())
        })?;
    }
    let checks = vec![Check::hard(
        "frequency bookkeeping matches the grid average",
        mismatches == 0,
        format!("{} instances, {mismatches} mismatches", table.rows.len()),
    )];
    Ok(Outcome { tables: vec![table], payload: Value::Array(payload), checks, timings })
}

fn matrix_power(a: &IntMatrix, e: u64) -> Result<IntMatrix, HarnessError> {
    let k = a.dim();
    let mut out = IntMatrix((0..k).map(|i| (0..k).map(|j| (i == j) as i64).collect()).collect());
    for _ in 0..e {
        let mut next = vec![vec![0i64; k]; k];
        for i in 0..k {
            for j in 0..k {
                let mut acc = 0i64;
                for l in 0..k {
                    acc = out.0[i][l]
                        .checked_mul(a.0[l][j])
                        .and_then(|v| acc.checked_add(v))
                        .ok_or_else(|| HarnessError::ResourceExhausted("matrix power overflows".into()))?;
                }
                next[i][j] = acc;
            }
        }
        out = IntMatrix(next);
    }
    Ok(out)
}

/// Human-readable summary of a manifest.
pub fn summary(manifest: &RunManifest) -> String {
    let mut out = String::new();
    for c in &manifest.checks {
        let kind = if c.hard { "hard" } else { "soft" };
        let status = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "[{status}] ({kind}) {}{}", c.name, if c.detail.is_empty() { String::new() } else { format!(": {}", c.detail) });
    }
    let _ = writeln!(
        out,
        "{}: {} hard failure(s), {} soft failure(s); outputs {:?}",
        manifest.name, manifest.hard_failures, manifest.soft_failures, manifest.outputs
    );
    out
}
