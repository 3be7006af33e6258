//! Records, summaries and the three output formats.
//!
//! Every record has the same fields in the same order. CSV columns are the
//! command's input keys, then `value, oracle, diff, error_estimate,
//! oracle_tail, tolerance, terms, guards, ms, failed, error`, then the
//! command's extra keys (only `rh` has any).

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::str::FromStr;

use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Text => "text",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Int(i64),
    Real(f64),
    Text(String),
}

impl Input {
    fn json(&self) -> Value {
        match self {
            Input::Int(v) => Value::from(*v),
            Input::Real(v) => num(*v),
            Input::Text(s) => Value::from(s.as_str()),
        }
    }

    fn text(&self) -> String {
        match self {
            Input::Int(v) => v.to_string(),
            Input::Real(v) => v.to_string(),
            Input::Text(s) => s.clone(),
        }
    }
}

/// A real as a JSON number with 17 significant digits; non-finite is null.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let n = Number::from_str(&format!("{x:.16e}")).expect("formatted float is valid JSON");
    Value::Number(n)
}

fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn csv_real(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.16e}"),
        _ => String::new(),
    }
}

#[derive(Debug, Clone, Default)]
pub struct Record {
    pub inputs: Vec<(&'static str, Input)>,
    pub value: Option<f64>,
    pub oracle: Option<f64>,
    pub error_estimate: Option<f64>,
    /// Bound on what the oracle itself leaves out (Pell tails).
    pub oracle_tail: f64,
    /// Allowed |diff| on top of error_estimate + oracle_tail.
    pub tolerance: f64,
    pub terms: BTreeMap<String, usize>,
    pub guards: Vec<&'static str>,
    pub ms: f64,
    /// Set by checks that are not a |diff| comparison (misclassification,
    /// nonpositive margin).
    pub check_failed: bool,
    pub error: Option<String>,
    pub extras: Vec<(&'static str, Option<f64>)>,
}

impl Record {
    pub fn new(inputs: Vec<(&'static str, Input)>) -> Self {
        Self { inputs, ..Default::default() }
    }

    pub fn diff(&self) -> Option<f64> {
        Some((self.value? - self.oracle?).abs())
    }

    pub fn failed(&self) -> bool {
        if self.error.is_some() || self.check_failed {
            return true;
        }
        match self.diff() {
            Some(d) => !(d <= self.tolerance + self.error_estimate.unwrap_or(0.0) + self.oracle_tail),
            None => false,
        }
    }

    fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("inputs".into(), Value::Object(self.inputs.iter().map(|(k, v)| (k.to_string(), v.json())).collect()));
        m.insert("value".into(), opt(self.value));
        m.insert("oracle".into(), opt(self.oracle));
        m.insert("diff".into(), opt(self.diff()));
        m.insert("error_estimate".into(), opt(self.error_estimate));
        m.insert("oracle_tail".into(), num(self.oracle_tail));
        m.insert("tolerance".into(), num(self.tolerance));
        m.insert("terms".into(), Value::Object(self.terms.iter().map(|(k, v)| (k.clone(), Value::from(*v))).collect()));
        m.insert("guards".into(), Value::from(self.guards.clone()));
        m.insert("ms".into(), num(self.ms));
        m.insert("failed".into(), Value::from(self.failed()));
        m.insert("error".into(), self.error.clone().map_or(Value::Null, Value::from));
        if !self.extras.is_empty() {
            m.insert("extras".into(), Value::Object(self.extras.iter().map(|(k, v)| (k.to_string(), opt(*v))).collect()));
        }
        Value::Object(m)
    }

    fn terms_text(&self) -> String {
        self.terms.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
    }
}

pub struct Report {
    pub config: Map<String, Value>,
    pub records: Vec<Record>,
    /// Command-specific summary entries, e.g. per-suite maxima.
    pub extra_summary: Map<String, Value>,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.failed()).count()
    }

    fn max_diff(&self) -> f64 {
        self.records.iter().filter_map(Record::diff).fold(0.0, f64::max)
    }

    fn summary(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("records".into(), Value::from(self.records.len()));
        m.insert("failures".into(), Value::from(self.failures()));
        m.insert("max_abs_diff".into(), num(self.max_diff()));
        let errors = self.records.iter().filter(|r| r.error.is_some()).count();
        m.insert("errors".into(), Value::from(errors));
        m.insert("total_ms".into(), num(self.records.iter().map(|r| r.ms).sum()));
        m.extend(self.extra_summary.clone());
        m
    }

    pub fn write(&self, format: Format, out: &mut impl Write) -> io::Result<()> {
        match format {
            Format::Json => self.write_json(out),
            Format::Csv => self.write_csv(out),
            Format::Text => self.write_text(out),
        }
    }

    fn write_json(&self, out: &mut impl Write) -> io::Result<()> {
        let mut top = Map::new();
        top.insert("config".into(), Value::Object(self.config.clone()));
        top.insert("records".into(), Value::Array(self.records.iter().map(Record::to_json).collect()));
        top.insert("summary".into(), Value::Object(self.summary()));
        serde_json::to_writer_pretty(&mut *out, &Value::Object(top))?;
        writeln!(out)
    }

    fn write_csv(&self, out: &mut impl Write) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let first = self.records.first();
        let mut header: Vec<&str> = first.map(|r| r.inputs.iter().map(|(k, _)| *k).collect()).unwrap_or_default();
        header.extend([
            "value",
            "oracle",
            "diff",
            "error_estimate",
            "oracle_tail",
            "tolerance",
            "terms",
            "guards",
            "ms",
            "failed",
            "error",
        ]);
        if let Some(r) = first {
            header.extend(r.extras.iter().map(|(k, _)| *k));
        }
        w.write_record(&header)?;
        for r in &self.records {
            let mut row: Vec<String> = r.inputs.iter().map(|(_, v)| v.text()).collect();
            row.extend([
                csv_real(r.value),
                csv_real(r.oracle),
                csv_real(r.diff()),
                csv_real(r.error_estimate),
                csv_real(Some(r.oracle_tail)),
                csv_real(Some(r.tolerance)),
                r.terms_text(),
                r.guards.join(";"),
                csv_real(Some(r.ms)),
                r.failed().to_string(),
                r.error.clone().unwrap_or_default(),
            ]);
            row.extend(r.extras.iter().map(|(_, v)| csv_real(*v)));
            w.write_record(&row)?;
        }
        w.flush()
    }

    fn write_text(&self, out: &mut impl Write) -> io::Result<()> {
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.10e}"));
        for r in &self.records {
            let inputs: Vec<String> = r.inputs.iter().map(|(k, v)| format!("{k}={}", v.text())).collect();
            write!(
                out,
                "{}  value={} oracle={} diff={} est={}",
                inputs.join(" "),
                fmt(r.value),
                fmt(r.oracle),
                fmt(r.diff()),
                fmt(r.error_estimate)
            )?;
            for (k, v) in &r.extras {
                write!(out, " {k}={}", fmt(*v))?;
            }
            if !r.guards.is_empty() {
                write!(out, " guards={}", r.guards.join(";"))?;
            }
            if let Some(e) = &r.error {
                write!(out, " error=\"{e}\"")?;
            }
            writeln!(out, "{}", if r.failed() { "  FAIL" } else { "" })?;
        }
        for (k, v) in self.summary() {
            writeln!(out, "{k}: {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(num(0.1).to_string(), "1.0000000000000001e-1");
        assert_eq!(num(-3.0).to_string(), "-3.0000000000000000e+0");
        assert_eq!(num(f64::NAN), Value::Null);
        let back: f64 = num(1.0 / 3.0).as_f64().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn failure_rule() {
        let mut r = Record::new(vec![("N", Input::Int(1))]);
        r.value = Some(1.0);
        r.oracle = Some(1.0 + 2e-8);
        r.tolerance = 1e-8;
        assert!(r.failed());
        r.error_estimate = Some(2e-8);
        assert!(!r.failed());
        r.check_failed = true;
        assert!(r.failed());
    }
}
