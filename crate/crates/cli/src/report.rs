use fsl_core::spaces::{EquivalenceReport, RatioEntry, RatioStats, BOUNDS_RTOL};
use serde::{Deserialize, Serialize};

/// Condition a check's statistics must meet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Requirement {
    /// `max <= limit`.
    AtMost { limit: f64 },
    /// `lo <= min` and `max <= hi`.
    Within { lo: f64, hi: f64 },
    /// `max / min <= limit`.
    Spread { limit: f64 },
    /// Every value is finite and positive.
    FinitePositive,
    /// `[min, max]` inside the recorded baseline band, up to the drift.
    Baseline,
}

impl Requirement {
    fn holds(&self, r: &RatioStats) -> bool {
        match *self {
            Requirement::AtMost { limit } => r.max <= limit,
            Requirement::Within { lo, hi } => r.min >= lo && r.max <= hi,
            Requirement::Spread { limit } => r.min > 0.0 && r.max / r.min <= limit,
            Requirement::FinitePositive => r.min > 0.0 && r.max.is_finite(),
            Requirement::Baseline => true,
        }
    }

    fn describe(&self, r: &RatioStats) -> String {
        match *self {
            Requirement::AtMost { limit } => format!("max {:e} exceeds {limit:e}", r.max),
            Requirement::Within { lo, hi } => {
                format!("[{:e}, {:e}] not within [{lo:e}, {hi:e}]", r.min, r.max)
            }
            Requirement::Spread { limit } => {
                format!("spread {:.4} exceeds {limit}", r.max / r.min)
            }
            Requirement::FinitePositive => format!("values [{:e}, {:e}] not finite positive", r.min, r.max),
            Requirement::Baseline => String::new(),
        }
    }
}

/// One measured quantity: statistics over samples, the requirements on them
/// and the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub suite: String,
    pub check: String,
    pub label: String,
    pub params: String,
    #[serde(with = "stats_json")]
    pub ratios: RatioStats,
    pub requirements: Vec<Requirement>,
    pub baseline: Option<[f64; 2]>,
    pub gating: bool,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Plot series `(x, y)`, e.g. a constant against scale.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<[f64; 2]>,
}

impl CheckResult {
    pub fn new(
        suite: &str,
        check: &str,
        label: impl Into<String>,
        params: impl Into<String>,
        values: &[f64],
    ) -> Self {
        Self {
            suite: suite.into(),
            check: check.into(),
            label: label.into(),
            params: params.into(),
            ratios: RatioStats::of(values),
            requirements: Vec::new(),
            baseline: None,
            gating: true,
            pass: true,
            notes: Vec::new(),
            series: Vec::new(),
        }
    }

    /// A boolean outcome recorded as 1 or 0 and required to be 1.
    pub fn flag(suite: &str, check: &str, label: impl Into<String>, params: impl Into<String>, ok: bool) -> Self {
        Self::new(suite, check, label, params, &[if ok { 1.0 } else { 0.0 }])
            .require(Requirement::Within { lo: 1.0, hi: 1.0 })
    }

    pub fn from_entry(suite: &str, check: &str, e: &RatioEntry) -> Self {
        let mut c = Self {
            suite: suite.into(),
            check: check.into(),
            label: e.label.clone(),
            params: e.params.clone(),
            ratios: e.ratios,
            requirements: vec![Requirement::FinitePositive, Requirement::Baseline],
            baseline: None,
            gating: true,
            pass: true,
            notes: Vec::new(),
            series: Vec::new(),
        };
        if let Some([lo, hi]) = e.bounds {
            c.requirements.push(Requirement::Within {
                lo: lo * (1.0 - BOUNDS_RTOL),
                hi: (hi * (1.0 + BOUNDS_RTOL)).min(f64::MAX),
            });
        }
        c
    }

    pub fn require(mut self, r: Requirement) -> Self {
        self.requirements.push(r);
        self
    }

    pub fn informational(mut self) -> Self {
        self.gating = false;
        self
    }

    pub fn note(mut self, n: impl Into<String>) -> Self {
        self.notes.push(n.into());
        self
    }

    pub fn with_series(mut self, s: Vec<[f64; 2]>) -> Self {
        self.series = s;
        self
    }

    pub fn key(&self) -> String {
        format!("{}/{}/{}|{}", self.suite, self.check, self.label, self.params)
    }

    pub fn needs_baseline(&self) -> bool {
        self.requirements.contains(&Requirement::Baseline)
    }

    /// Applies every non-baseline requirement; baseline gating is done by
    /// the runner.
    pub fn evaluate(&mut self) {
        let mut failures = Vec::new();
        if self.ratios.min.is_nan() || self.ratios.max.is_nan() {
            failures.push("no finite values".to_string());
        }
        for r in &self.requirements {
            if !r.holds(&self.ratios) {
                failures.push(r.describe(&self.ratios));
            }
        }
        if !failures.is_empty() {
            self.pass = false;
        }
        self.notes.extend(failures);
    }
}

pub fn checks_from_report(suite: &str, r: &EquivalenceReport) -> Vec<CheckResult> {
    r.entries
        .iter()
        .map(|e| CheckResult::from_entry(suite, &r.check, e))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub pass: bool,
    pub checks: Vec<CheckResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub fixture: String,
    pub config_hash: String,
    pub seed: u64,
    pub samples: usize,
    pub generated_at: String,
    pub suites: Vec<SuiteReport>,
    pub pass: bool,
}

impl Report {
    pub fn empty(fixture: &str) -> Self {
        Self {
            fixture: fixture.into(),
            config_hash: String::new(),
            seed: 0,
            samples: 0,
            generated_at: String::new(),
            suites: Vec::new(),
            pass: true,
        }
    }

    pub fn checks(&self) -> impl Iterator<Item = &CheckResult> {
        self.suites.iter().flat_map(|s| s.checks.iter())
    }

    /// Gating checks that failed.
    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks().filter(|c| c.gating && !c.pass).collect()
    }
}

/// JSON has no non-finite numbers: they are written as `null` and read back
/// as NaN.
mod stats_json {
    use fsl_core::spaces::RatioStats;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Repr {
        min: Option<f64>,
        max: Option<f64>,
        median: Option<f64>,
    }

    fn opt(v: f64) -> Option<f64> {
        v.is_finite().then_some(v)
    }

    pub fn serialize<S: Serializer>(r: &RatioStats, s: S) -> Result<S::Ok, S::Error> {
        Repr {
            min: opt(r.min),
            max: opt(r.max),
            median: opt(r.median),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<RatioStats, D::Error> {
        let r = Repr::deserialize(d)?;
        Ok(RatioStats {
            min: r.min.unwrap_or(f64::NAN),
            max: r.max.unwrap_or(f64::NAN),
            median: r.median.unwrap_or(f64::NAN),
        })
    }
}
