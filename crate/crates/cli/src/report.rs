use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{RunError, RunResult};

/// One asserted inequality with the numbers behind it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    /// Acceptance criterion this check belongs to, if any.
    pub criterion: Option<u8>,
    pub name: String,
    pub value: f64,
    /// `<=`, `>=`, `<`, `>`, `|value - target| <=` or `holds`.
    pub relation: &'static str,
    pub limit: f64,
    pub target: Option<f64>,
    /// Numerical error budget behind the comparison (quadrature estimate,
    /// solver tolerance, ...).
    pub budget: BTreeMap<String, f64>,
    pub pass: bool,
}

impl Check {
    fn new(criterion: Option<u8>, name: &str, value: f64, relation: &'static str, limit: f64, pass: bool) -> Self {
        Self { criterion, name: name.to_string(), value, relation, limit, target: None, budget: BTreeMap::new(), pass }
    }

    pub fn at_most(criterion: Option<u8>, name: &str, value: f64, limit: f64) -> Self {
        Self::new(criterion, name, value, "<=", limit, value <= limit)
    }

    pub fn at_least(criterion: Option<u8>, name: &str, value: f64, limit: f64) -> Self {
        Self::new(criterion, name, value, ">=", limit, value >= limit)
    }

    pub fn below(criterion: Option<u8>, name: &str, value: f64, limit: f64) -> Self {
        Self::new(criterion, name, value, "<", limit, value < limit)
    }

    pub fn above(criterion: Option<u8>, name: &str, value: f64, limit: f64) -> Self {
        Self::new(criterion, name, value, ">", limit, value > limit)
    }

    pub fn within(criterion: Option<u8>, name: &str, value: f64, target: f64, tol: f64) -> Self {
        let mut c = Self::new(criterion, name, value, "|value - target| <=", tol, (value - target).abs() <= tol);
        c.target = Some(target);
        c
    }

    pub fn holds(criterion: Option<u8>, name: &str, ok: bool) -> Self {
        Self::new(criterion, name, if ok { 1.0 } else { 0.0 }, "holds", 1.0, ok)
    }

    pub fn budget(mut self, key: &str, value: f64) -> Self {
        self.budget.insert(key.to_string(), value);
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub parameters: serde_json::Value,
    /// Free-form labels such as `approximate-D`.
    pub labels: Vec<String>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub data: serde_json::Value,
}

impl Report {
    pub fn new(command: &str, parameters: impl Serialize) -> Self {
        Self {
            command: command.to_string(),
            parameters: serde_json::to_value(parameters).unwrap_or(serde_json::Value::Null),
            labels: Vec::new(),
            checks: Vec::new(),
            pass: true,
            data: serde_json::Value::Object(Default::default()),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn label(&mut self, label: &str) {
        if !self.labels.iter().any(|l| l == label) {
            self.labels.push(label.to_string());
        }
    }

    pub fn data(&mut self, key: &str, value: impl Serialize) {
        if let serde_json::Value::Object(map) = &mut self.data {
            map.insert(key.to_string(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
        }
    }

    /// Pass/fail per acceptance criterion touched by this report.
    pub fn criteria(&self) -> BTreeMap<u8, bool> {
        let mut out = BTreeMap::new();
        for c in &self.checks {
            if let Some(id) = c.criterion {
                *out.entry(id).or_insert(true) &= c.pass;
            }
        }
        out
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// `[criterion] name: value relation limit`, or `value vs target (tol ..)`.
impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(i) = self.criterion {
            write!(f, "[{i}] ")?;
        }
        match self.target {
            Some(t) => write!(f, "{}: {:e} vs {:e} (tol {:e})", self.name, self.value, t, self.limit),
            None => write!(f, "{}: {:e} {} {:e}", self.name, self.value, self.relation, self.limit),
        }
    }
}

/// A CSV table with a header row.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_header(name: &str, header: Vec<String>) -> Self {
        Self { name: name.to_string(), header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> RunResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| RunError::Io { path: self.name.clone(), source: e.into_error() })?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// Float cell in shortest round-trip form, exponent notation for tiny or
/// huge magnitudes.
pub fn num(x: f64) -> String {
    if x != 0.0 && x.is_finite() && !(1e-4..1e15).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Report,
    pub tables: Vec<Table>,
}

impl Outcome {
    /// Writes `<command>.json` and one CSV per table into `dir`.
    pub fn write(&self, dir: &Path) -> RunResult<Vec<PathBuf>> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| RunError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let mut written = Vec::new();
        let json = dir.join(format!("{}.json", self.report.command));
        let mut text = serde_json::to_string_pretty(&self.report)?;
        text.push('\n');
        fs::write(&json, text).map_err(io(&json))?;
        written.push(json);
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            fs::write(&path, t.to_csv()?).map_err(io(&path))?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criteria_aggregate_checks() {
        let mut r = Report::new("x", serde_json::json!({}));
        r.push(Check::at_most(Some(1), "a", 1.0, 2.0));
        r.push(Check::within(Some(1), "b", 1.0, 1.5, 0.1));
        r.push(Check::above(Some(2), "c", 1.0, 0.0));
        r.push(Check::holds(None, "d", true));
        let c = r.criteria();
        assert_eq!(c.get(&1), Some(&false));
        assert_eq!(c.get(&2), Some(&true));
        assert!(!r.pass);
        assert_eq!(r.failures().count(), 1);
    }

    #[test]
    fn csv_has_header() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec![num(0.5), num(1e-13)]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n0.5,1e-13\n");
    }
}
