//! Experiment configuration documents.

use std::path::PathBuf;

use horopoints::arith::{is_prime_u64, Rational};
use horopoints::observables::Observable;
use horopoints::points::{Family, PointSetSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;

/// Largest modulus the harness will enumerate.
pub const MAX_N: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Generate,
    Equidist,
    Kloosterman,
    Invariance,
    Cardinality,
    Discrepancy,
    CuspMass,
    Projection,
    Intersection,
    Weyl,
    Mixing,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Generate => "generate",
            ExperimentKind::Equidist => "equidist",
            ExperimentKind::Kloosterman => "kloosterman",
            ExperimentKind::Invariance => "invariance",
            ExperimentKind::Cardinality => "cardinality",
            ExperimentKind::Discrepancy => "discrepancy",
            ExperimentKind::CuspMass => "cusp_mass",
            ExperimentKind::Projection => "projection",
            ExperimentKind::Intersection => "intersection",
            ExperimentKind::Weyl => "weyl",
            ExperimentKind::Mixing => "mixing",
        }
    }
}

/// Values of `n` to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    Explicit {
        values: Vec<u64>,
    },
    /// `start, start + step, …` up to and including `end`.
    Range {
        start: u64,
        end: u64,
        #[serde(default = "one")]
        step: u64,
    },
    /// `start·ratio^i` for `i < count`, each moved to the next prime when
    /// `primes_only` is set.
    Geometric {
        start: u64,
        ratio: u64,
        count: u32,
        #[serde(default)]
        primes_only: bool,
    },
}

fn one() -> u64 {
    1
}

impl Schedule {
    pub fn values(&self) -> Result<Vec<u64>, HarnessError> {
        let values: Vec<u64> = match self {
            Schedule::Explicit { values } => values.clone(),
            Schedule::Range { start, end, step } => {
                if *step == 0 {
                    return Err(HarnessError::ConfigInvalid("range step must be positive".into()));
                }
                (*start..=*end).step_by(*step as usize).collect()
            }
            Schedule::Geometric { start, ratio, count, primes_only } => {
                let mut out = Vec::new();
                let mut v = *start;
                for _ in 0..*count {
                    let mut n = v;
                    if *primes_only {
                        while !is_prime_u64(n) {
                            n += 1;
                        }
                    }
                    out.push(n);
                    v = v.checked_mul(*ratio).ok_or_else(|| HarnessError::ResourceExhausted("geometric schedule overflows".into()))?;
                }
                out
            }
        };
        if values.is_empty() {
            return Err(HarnessError::ConfigInvalid("empty n schedule".into()));
        }
        if let Some(&n) = values.iter().find(|&&n| n > MAX_N) {
            return Err(HarnessError::ResourceExhausted(format!("n = {n} exceeds the limit {MAX_N}")));
        }
        if values.contains(&0) {
            return Err(HarnessError::ConfigInvalid("n must be at least 1".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HarnessError::ConfigInvalid("n schedule must be strictly increasing".into()));
        }
        Ok(values)
    }
}

/// Point-set fields shared by every `n` of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecTemplate {
    pub family: Family,
    #[serde(default = "half")]
    pub alpha: Rational,
    #[serde(default = "one")]
    pub d: u64,
    #[serde(default = "one_i")]
    pub a: i64,
    #[serde(default = "one_i")]
    pub b: i64,
    #[serde(default = "one_i")]
    pub c: i64,
    /// Defaults to `true` except for the full family.
    #[serde(default)]
    pub primitive: Option<bool>,
    #[serde(default)]
    pub free_alpha: bool,
}

fn half() -> Rational {
    Rational::new(1, 2).expect("nonzero denominator")
}

fn one_i() -> i64 {
    1
}

impl SpecTemplate {
    pub fn at(&self, n: u64) -> PointSetSpec {
        PointSetSpec {
            family: self.family,
            n,
            alpha: self.alpha,
            d: self.d,
            a: self.a,
            b: self.b,
            c: self.c,
            primitive: self.primitive.unwrap_or(self.family != Family::Full),
            free_alpha: self.free_alpha,
        }
    }
}

/// Soft checks on an equidistribution run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrendChecks {
    /// Errors must not increase after the first `n`.
    #[serde(default)]
    pub non_increasing_after_first: bool,
    #[serde(default)]
    pub min_kappa: Option<f64>,
    #[serde(default)]
    pub max_residual: Option<f64>,
}

/// Experiment-specific parameters; each kind reads the fields it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Equidist: run the template once per exponent.
    #[serde(default)]
    pub d_values: Option<Vec<u64>>,
    /// Cardinality and invariance: exponents `1..=d_max`.
    #[serde(default)]
    pub d_max: Option<u64>,
    /// Invariance: primes acting.
    #[serde(default)]
    pub primes: Option<Vec<u64>>,
    /// Kloosterman: all pairs with `|m_i| ≤ m_max`, unless `pairs` is given.
    #[serde(default)]
    pub m_max: Option<i64>,
    #[serde(default)]
    pub pairs: Option<Vec<[i64; 2]>>,
    /// Cusp mass thresholds.
    #[serde(default)]
    pub t_values: Option<Vec<f64>>,
    /// Cusp mass: allowed relative deviation from `3/(πT)`.
    #[serde(default)]
    pub rel_tolerance: Option<f64>,
    /// Discrepancy grid.
    #[serde(default)]
    pub betas: Option<Vec<f64>>,
    #[serde(default)]
    pub ds: Option<Vec<u64>>,
    #[serde(default)]
    pub ms: Option<Vec<i64>>,
    /// Projection: finite place sets and the largest exponent.
    #[serde(default)]
    pub place_sets: Option<Vec<Vec<u64>>>,
    #[serde(default)]
    pub max_exponent: Option<u32>,
    /// Weyl: frequencies `|m| ≤ m_factor·n`.
    #[serde(default)]
    pub m_factor: Option<i64>,
    /// Mixing: random instances and the entry bound.
    #[serde(default)]
    pub instances: Option<usize>,
    #[serde(default)]
    pub max_entry: Option<i64>,
    #[serde(default)]
    pub checks: Option<TrendChecks>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub spec: Option<SpecTemplate>,
    #[serde(default)]
    pub observables: Vec<Observable>,
    pub schedule: Schedule,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.experiment.name().to_string())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::ConfigInvalid(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if let Some(name) = &self.name {
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(HarnessError::ConfigInvalid(format!("name {name:?} must be [A-Za-z0-9_-]+")));
            }
        }
        let ns = self.schedule.values()?;
        let needs_spec = matches!(
            self.experiment,
            ExperimentKind::Generate | ExperimentKind::Equidist | ExperimentKind::CuspMass | ExperimentKind::Invariance
        );
        if needs_spec && self.spec.is_none() {
            return Err(HarnessError::ConfigInvalid(format!("{} needs a spec", self.experiment.name())));
        }
        if let Some(spec) = &self.spec {
            let ds = self.params.d_values.clone().unwrap_or_else(|| vec![spec.d]);
            for &n in &ns {
                for &d in &ds {
                    let s = PointSetSpec { d, ..spec.at(n) };
                    s.validate().map_err(|e| HarnessError::ConfigInvalid(format!("spec at n = {n}: {e}")))?;
                }
            }
        }
        if self.experiment == ExperimentKind::Equidist && self.observables.is_empty() {
            return Err(HarnessError::ConfigInvalid("equidist needs at least one observable".into()));
        }
        for obs in &self.observables {
            obs.validate().map_err(|e| HarnessError::ConfigInvalid(format!("observable {obs}: {e}")))?;
        }
        if self.threads == Some(0) {
            return Err(HarnessError::ConfigInvalid("threads must be positive".into()));
        }
        Ok(())
    }
}
