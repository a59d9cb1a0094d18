//! Run reports and their JSON/CSV serialization.

use std::fmt;
use std::io::Write;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

/// A float that survives JSON: non-finite values are written as the strings
/// `"NaN"`, `"inf"` and `"-inf"`.
#[derive(Clone, Copy, Debug)]
pub struct Num(pub f64);

impl PartialEq for Num {
    fn eq(&self, other: &Self) -> bool {
        (self.0.is_nan() && other.0.is_nan()) || self.0.to_bits() == other.0.to_bits()
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.0;
        if v.is_nan() {
            f.write_str("NaN")
        } else if v.is_infinite() {
            f.write_str(if v > 0.0 { "inf" } else { "-inf" })
        } else {
            write!(f, "{v:?}")
        }
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&self.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"NaN\", \"inf\", \"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                match v {
                    "NaN" => Ok(Num(f64::NAN)),
                    "inf" => Ok(Num(f64::INFINITY)),
                    "-inf" => Ok(Num(f64::NEG_INFINITY)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub value: Num,
}

impl Term {
    pub fn new(name: &str, value: f64) -> Self {
        Term { name: name.to_string(), value: Num(value) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Label {
    pub name: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    pub terms: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantRecord {
    pub name: String,
    pub value: Num,
    pub provenance: String,
}

/// One result of one configured check. Checks that evaluate several
/// inequalities produce one record per inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    /// Name of the configured check.
    pub check: String,
    /// Name of this result.
    pub name: String,
    pub applicable: bool,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holds: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<Num>,
    pub levels: Vec<LevelRecord>,
    pub values: Vec<Term>,
    pub constants: Vec<ConstantRecord>,
    pub labels: Vec<Label>,
    pub flags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<Num>,
}

impl CheckRecord {
    pub fn new(check: &str, name: &str) -> Self {
        CheckRecord {
            check: check.to_string(),
            name: name.to_string(),
            applicable: true,
            passed: false,
            expect: None,
            converged: None,
            holds: None,
            residual: None,
            margin: None,
            levels: Vec::new(),
            values: Vec::new(),
            constants: Vec::new(),
            labels: Vec::new(),
            flags: Vec::new(),
            note: None,
            wall_time_s: None,
        }
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|t| t.name == name).map(|t| t.value.0)
    }

    pub fn label(&self, name: &str) -> Option<&str> {
        self.labels.iter().find(|l| l.name == name).map(|l| l.value.as_str())
    }

    /// Number of CSV rows this record produces.
    pub fn row_count(&self) -> usize {
        self.levels.iter().map(|l| l.terms.len()).sum::<usize>() + self.values.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub checks: Vec<CheckRecord>,
    pub verdict: Verdict,
    pub passed: usize,
    pub failed: usize,
    pub not_applicable: usize,
}

impl RunReport {
    /// Verdict is `pass` iff every applicable record passed.
    pub fn new(checks: Vec<CheckRecord>) -> Self {
        let not_applicable = checks.iter().filter(|c| !c.applicable).count();
        let failed = checks.iter().filter(|c| c.applicable && !c.passed).count();
        let passed = checks.len() - not_applicable - failed;
        let verdict = if failed == 0 { Verdict::Pass } else { Verdict::Fail };
        RunReport { checks, verdict, passed, failed, not_applicable }
    }

    pub fn find(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("unknown format `{s}`, expected json or csv")),
        }
    }
}

pub const CSV_HEADER: [&str; 5] = ["check", "name", "level", "term", "value"];

pub fn to_json(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

pub fn to_csv(report: &RunReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for c in &report.checks {
        for l in &c.levels {
            let level = l.level.to_string();
            for t in &l.terms {
                w.write_record([&c.check, &c.name, &level, &t.name, &t.value.to_string()])
                    .expect("in-memory write");
            }
        }
        for t in &c.values {
            w.write_record([&c.check, &c.name, "", &t.name, &t.value.to_string()]).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn render(report: &RunReport, format: Format) -> String {
    match format {
        Format::Json => to_json(report),
        Format::Csv => to_csv(report),
    }
}

/// Writes the rendered report to `path`, or to stdout when `path` is `None`.
pub fn emit(report: &RunReport, format: Format, path: Option<&std::path::Path>) -> std::io::Result<()> {
    write_text(&render(report, format), path)
}

pub fn write_text(text: &str, path: Option<&std::path::Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_numbers_round_trip() {
        for v in [f64::NAN, f64::INFINITY, f64::NEG_INFINITY, -0.0, 0.1 + 0.2, 1e-310] {
            let s = serde_json::to_string(&Num(v)).unwrap();
            let back: Num = serde_json::from_str(&s).unwrap();
            assert_eq!(back, Num(v), "{s}");
        }
    }

    #[test]
    fn empty_report_gives_header_only_csv() {
        let csv = to_csv(&RunReport::new(Vec::new()));
        assert_eq!(csv, "check,name,level,term,value\n");
    }

    #[test]
    fn verdict_ignores_not_applicable_records() {
        let mut a = CheckRecord::new("opial", "opial-1");
        a.applicable = false;
        let mut b = CheckRecord::new("identity", "identity");
        b.passed = true;
        assert_eq!(RunReport::new(vec![a.clone(), b]).verdict, Verdict::Pass);
        a.applicable = true;
        assert_eq!(RunReport::new(vec![a]).verdict, Verdict::Fail);
    }
}
