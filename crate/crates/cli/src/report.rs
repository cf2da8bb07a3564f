use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `measured < threshold`
    Below,
    /// `measured ≤ threshold`
    AtMost,
    /// `measured ≥ threshold`
    AtLeast,
    /// `measured > threshold`
    Above,
}

impl Comparison {
    fn holds(self, measured: f64, threshold: f64) -> bool {
        match self {
            Self::Below => measured < threshold,
            Self::AtMost => measured <= threshold,
            Self::AtLeast => measured >= threshold,
            Self::Above => measured > threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub comparison: Comparison,
}

/// Refinement expectation on `b / a` for reports at `N` and `2N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub quantity: String,
    pub ratio_min: f64,
    pub ratio_max: f64,
}

impl Expectation {
    pub fn new(quantity: &str, ratio_min: f64, ratio_max: f64) -> Self {
        Self { quantity: quantity.into(), ratio_min, ratio_max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    /// The CLI invocation that reproduces this report.
    pub invocation: String,
    /// Acceptance criteria exercised by this run.
    pub criteria: Vec<u32>,
    pub config: serde_json::Value,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub quantities: BTreeMap<String, f64>,
    pub expectations: Vec<Expectation>,
    pub artifacts: Vec<String>,
}

impl Report {
    pub fn new(command: &str, invocation: String, criteria: Vec<u32>, config: serde_json::Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            invocation,
            criteria,
            config,
            passed: true,
            checks: vec![],
            quantities: BTreeMap::new(),
            expectations: vec![],
            artifacts: vec![],
        }
    }

    pub fn check(&mut self, name: &str, measured: f64, comparison: Comparison, threshold: f64) -> bool {
        let passed = comparison.holds(measured, threshold);
        self.passed &= passed;
        self.checks.push(Check { name: name.into(), passed, measured, threshold, comparison });
        passed
    }

    /// A check on a boolean property; recorded as `measured ∈ {0, 1}` at least `1`.
    pub fn check_flag(&mut self, name: &str, ok: bool) -> bool {
        self.check(name, if ok { 1.0 } else { 0.0 }, Comparison::AtLeast, 1.0)
    }

    pub fn quantity(&mut self, name: &str, value: f64) {
        self.quantities.insert(name.into(), value);
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn read(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub quantity: String,
    pub a: f64,
    pub b: f64,
    pub ratio: f64,
    /// `None` when no expectation is declared for the quantity.
    pub passed: Option<bool>,
    pub expected: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementSummary {
    pub schema_version: u32,
    pub command: String,
    pub n_a: Option<u64>,
    pub n_b: Option<u64>,
    pub rows: Vec<ComparisonRow>,
    pub passed: bool,
}

fn resolution(config: &serde_json::Value) -> Option<u64> {
    config.get("N").and_then(|v| v.as_u64())
}

/// Tabulate `b / a` for every quantity the two reports share and apply the
/// expectations declared by `a`. Reports must come from the same command and
/// agree on every configuration key except `N`.
pub fn compare(a: &Report, b: &Report) -> Result<RefinementSummary, String> {
    if a.command != b.command {
        return Err(format!("mismatched commands {} and {}", a.command, b.command));
    }
    let strip = |c: &serde_json::Value| {
        let mut c = c.clone();
        if let Some(m) = c.as_object_mut() {
            m.remove("N");
        }
        c
    };
    let (ca, cb) = (strip(&a.config), strip(&b.config));
    if ca != cb {
        let key = match (ca.as_object(), cb.as_object()) {
            (Some(x), Some(y)) => x
                .iter()
                .find(|(k, v)| y.get(*k) != Some(*v))
                .map(|(k, _)| k.clone())
                .or_else(|| y.keys().find(|k| !x.contains_key(*k)).cloned())
                .unwrap_or_default(),
            _ => String::new(),
        };
        return Err(format!("mismatched configs: key {key} differs"));
    }
    let mut rows = Vec::new();
    let mut passed = true;
    for (q, va) in &a.quantities {
        let Some(vb) = b.quantities.get(q) else { continue };
        let ratio = if *va == *vb { 1.0 } else { vb / va };
        let exp = a.expectations.iter().find(|e| &e.quantity == q);
        let ok = exp.map(|e| ratio >= e.ratio_min && ratio <= e.ratio_max);
        if ok == Some(false) {
            passed = false;
        }
        rows.push(ComparisonRow {
            quantity: q.clone(),
            a: *va,
            b: *vb,
            ratio,
            passed: ok,
            expected: exp.map(|e| (e.ratio_min, e.ratio_max)),
        });
    }
    Ok(RefinementSummary {
        schema_version: SCHEMA_VERSION,
        command: a.command.clone(),
        n_a: resolution(&a.config),
        n_b: resolution(&b.config),
        rows,
        passed,
    })
}

impl RefinementSummary {
    pub fn table(&self) -> String {
        let mut out = format!("{:<36} {:>14} {:>14} {:>10}  {}\n", "quantity", "a", "b", "b/a", "expectation");
        for r in &self.rows {
            let verdict = match (r.passed, r.expected) {
                (Some(p), Some((lo, hi))) => format!("[{lo}, {hi}] {}", if p { "PASS" } else { "FAIL" }),
                _ => "-".into(),
            };
            out += &format!("{:<36} {:>14.6e} {:>14.6e} {:>10.4}  {}\n", r.quantity, r.a, r.b, r.ratio, verdict);
        }
        out
    }
}
