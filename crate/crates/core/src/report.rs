//! Verification reports: per-check records with anchor strings, summary
//! counts, JSON and CSV rendering.

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// A heuristic search that neither confirmed nor refuted.
    Inconclusive,
    Info,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Verdict {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Info => "info",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub name: String,
    /// Opaque key naming the statement the check exercises.
    pub anchor: String,
    pub verdict: Verdict,
    pub value: Option<f64>,
    pub details: Value,
}

impl Record {
    pub fn new(name: impl Into<String>, anchor: impl Into<String>, verdict: Verdict, value: Option<f64>, details: Value) -> Record {
        Record { name: name.into(), anchor: anchor.into(), verdict, value, details }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
    pub info: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub config: Value,
    pub records: Vec<Record>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl Report {
    pub fn new(command: impl Into<String>, config: Value) -> Report {
        Report { command: command.into(), config, records: Vec::new(), summary: Summary::default(), timestamp: None }
    }

    pub fn push(&mut self, r: Record) {
        match r.verdict {
            Verdict::Pass => self.summary.pass += 1,
            Verdict::Fail => self.summary.fail += 1,
            Verdict::Inconclusive => self.summary.inconclusive += 1,
            Verdict::Info => self.summary.info += 1,
        }
        self.records.push(r);
    }

    pub fn passed(&self) -> bool {
        self.summary.fail == 0
    }

    /// Seconds since the Unix epoch.
    pub fn stamp(&mut self) {
        self.timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Rows `name,anchor,verdict,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("name,anchor,verdict,value\n");
        for r in &self.records {
            let v = r.value.map(|v| v.to_string()).unwrap_or_default();
            s.push_str(&format!("{},{},{},{}\n", csv_field(&r.name), csv_field(&r.anchor), r.verdict.as_str(), v));
        }
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
