//! Certificate reports and their JSON/CSV serialization.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Outcome of one numerical certificate check.
///
/// `check` names the inequality or identity being certified; `constant` is
/// the certified constant (A_w, q_m, C*, ...), `worst_ratio` the tightest
/// observed lhs/rhs ratio, and `witness_point` the grid location where it
/// occurred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub check: String,
    pub passed: bool,
    pub constant: f64,
    pub worst_ratio: f64,
    pub witness_point: Vec<f64>,
    pub grid_spec: String,
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BoundReport {
    pub fn new(check: impl Into<String>) -> Self {
        Self {
            check: check.into(),
            passed: true,
            constant: 0.0,
            worst_ratio: 0.0,
            witness_point: Vec::new(),
            grid_spec: String::new(),
            constants: BTreeMap::new(),
            note: None,
        }
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant = c;
        self
    }

    pub fn with_ratio(mut self, r: f64) -> Self {
        self.worst_ratio = r;
        self
    }

    pub fn with_witness(mut self, w: Vec<f64>) -> Self {
        self.witness_point = w;
        self
    }

    pub fn with_grid(mut self, g: impl Into<String>) -> Self {
        self.grid_spec = g.into();
        self
    }

    pub fn with_named(mut self, key: &str, v: f64) -> Self {
        self.constants.insert(key.to_string(), v);
        self
    }

    pub fn with_note(mut self, n: impl Into<String>) -> Self {
        self.note = Some(n.into());
        self
    }

    pub fn failed(mut self) -> Self {
        self.passed = false;
        self
    }

    pub fn named(&self, key: &str) -> Option<f64> {
        self.constants.get(key).copied()
    }

    pub const CSV_HEADER: &'static str =
        "check,passed,constant,worst_ratio,witness_point,grid_spec";

    pub fn csv_row(&self) -> String {
        let witness = self
            .witness_point
            .iter()
            .map(|v| fmt_f64(*v))
            .collect::<Vec<_>>()
            .join(";");
        format!(
            "{},{},{},{},{},{}",
            csv_escape(&self.check),
            self.passed,
            fmt_f64(self.constant),
            fmt_f64(self.worst_ratio),
            witness,
            csv_escape(&self.grid_spec)
        )
    }
}

/// Fixed 17-significant-digit formatting. Rust's float formatting rounds the
/// exact binary value, ties to even.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{:.16e}", v)
    } else {
        format!("{}", v)
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV table of reports with the standard header.
pub fn reports_to_csv(reports: &[BoundReport]) -> String {
    let mut out = String::new();
    writeln!(out, "{}", BoundReport::CSV_HEADER).unwrap();
    for r in reports {
        writeln!(out, "{}", r.csv_row()).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn json_round_trip_keeps_constants() {
        let r = BoundReport::new("weight-lipschitz")
            .with_constant(1.25)
            .with_named("a_w", 1.05)
            .with_witness(vec![1.0, 2.0]);
        let s = serde_json::to_string(&r).unwrap();
        let back: BoundReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn csv_quotes_commas() {
        let r = BoundReport::new("x").with_grid("log[0.1,1000]x400");
        assert!(r.csv_row().contains("\"log[0.1,1000]x400\""));
    }
}
