use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{RunConfig, Suite};
use crate::CliError;

/// How a measured value is compared against its expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|measured − expected| ≤ tol`.
    Close,
    /// `measured ≤ expected + tol`.
    AtMost,
    /// `measured ≥ expected − tol`.
    AtLeast,
    /// `measured < expected`.
    Below,
    /// `measured > expected`.
    Above,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Close => "close",
            Relation::AtMost => "at_most",
            Relation::AtLeast => "at_least",
            Relation::Below => "below",
            Relation::Above => "above",
        }
    }
}

/// Where the expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Closed-form value or identity.
    Exact,
    /// Computed by an independent oracle.
    Derived,
    /// Numerical tolerance or desk-scale threshold.
    Numerical,
    Plumbing,
}

impl Basis {
    pub fn as_str(self) -> &'static str {
        match self {
            Basis::Exact => "exact",
            Basis::Derived => "derived",
            Basis::Numerical => "numerical",
            Basis::Plumbing => "plumbing",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub anchor: &'static str,
    pub basis: Basis,
    pub relation: Relation,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, anchor: &'static str, basis: Basis, relation: Relation, measured: f64, expected: f64, tolerance: f64) -> Self {
        let pass = match relation {
            Relation::Close => (measured - expected).abs() <= tolerance,
            Relation::AtMost => measured <= expected + tolerance,
            Relation::AtLeast => measured >= expected - tolerance,
            Relation::Below => measured < expected,
            Relation::Above => measured > expected,
        };
        Self { name: name.into(), anchor, basis, relation, measured, expected, tolerance, pass, error: None }
    }

    /// A check that could not be evaluated.
    pub fn errored(name: impl Into<String>, anchor: &'static str, err: impl fmt::Display) -> Self {
        Self {
            name: name.into(),
            anchor,
            basis: Basis::Plumbing,
            relation: Relation::Close,
            measured: f64::NAN,
            expected: f64::NAN,
            tolerance: 0.0,
            pass: false,
            error: Some(err.to_string()),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        if let Some(e) = &self.error {
            return write!(f, "{status} {} [{}]: {e}", self.name, self.anchor);
        }
        let rel = match self.relation {
            Relation::Close => "within",
            Relation::AtMost => "at most",
            Relation::AtLeast => "at least",
            Relation::Below => "below",
            Relation::Above => "above",
        };
        write!(f, "{status} {} [{}]: measured {:e}, expected {rel} {:e}", self.name, self.anchor, self.measured, self.expected)?;
        if self.tolerance > 0.0 {
            write!(f, " (tol {:e})", self.tolerance)?;
        }
        Ok(())
    }
}

/// Plot-ready table written next to the report.
#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub suite: Suite,
    pub config: RunConfig,
    pub pass: bool,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(suite: Suite, config: &RunConfig) -> Self {
        Self { suite, config: config.clone(), pass: true, checks: Vec::new(), tables: Vec::new() }
    }

    pub fn push(&mut self, check: Check) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Writes `<suite>.json`, `<suite>.csv` with the checks, and one
    /// `<suite>-<table>.csv` per table. Returns the written paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        let json = dir.join(format!("{}.json", self.suite));
        std::fs::write(&json, serde_json::to_string_pretty(self)? + "\n")?;
        paths.push(json);

        let csv_path = dir.join(format!("{}.csv", self.suite));
        let mut w = csv::Writer::from_path(&csv_path)?;
        w.write_record(["name", "anchor", "basis", "relation", "measured", "expected", "tolerance", "pass"])?;
        for c in &self.checks {
            w.write_record([
                c.name.clone(),
                c.anchor.to_string(),
                c.basis.as_str().into(),
                c.relation.as_str().into(),
                format!("{:?}", c.measured),
                format!("{:?}", c.expected),
                format!("{:?}", c.tolerance),
                c.pass.to_string(),
            ])?;
        }
        w.flush()?;
        paths.push(csv_path);

        for t in &self.tables {
            let p = dir.join(format!("{}-{}.csv", self.suite, t.name));
            let mut w = csv::Writer::from_path(&p)?;
            w.write_record(&t.header)?;
            for row in &t.rows {
                w.write_record(row.iter().map(|v| format!("{v:?}")))?;
            }
            w.flush()?;
            paths.push(p);
        }
        Ok(paths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations() {
        let c = |r, m| Check::new("x", "a", Basis::Exact, r, m, 1.0, 0.1).pass;
        assert!(c(Relation::Close, 1.05) && !c(Relation::Close, 1.2));
        assert!(c(Relation::AtMost, 1.1) && !c(Relation::AtMost, 1.2));
        assert!(c(Relation::AtLeast, 0.9) && !c(Relation::AtLeast, 0.8));
        assert!(c(Relation::Below, 0.99) && !c(Relation::Below, 1.0));
        assert!(c(Relation::Above, 1.01) && !c(Relation::Above, 1.0));
        assert!(!c(Relation::Close, f64::NAN));
    }

    #[test]
    fn failing_check_names_anchor_and_values() {
        let c = Check::new("lambda1 K=0", "instability", Basis::Exact, Relation::Below, 0.5, 0.0, 0.0);
        let s = c.to_string();
        assert!(s.starts_with("FAIL lambda1 K=0 [instability]"), "{s}");
        assert!(s.contains("measured 5e-1") && s.contains("below 0e0"), "{s}");
    }
}
