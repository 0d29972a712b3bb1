//! Structured audit results.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Measurement only; never fails a run.
    Informational,
    /// The audited statement's hypotheses do not hold for the input.
    HypothesisUnmet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditFinding {
    pub audit: String,
    pub verdict: Verdict,
    pub measured: Map<String, Value>,
    pub tolerance: Map<String, Value>,
    pub witness: Option<Value>,
    pub notes: Vec<String>,
}

impl AuditFinding {
    pub fn new(audit: impl Into<String>) -> Self {
        AuditFinding {
            audit: audit.into(),
            verdict: Verdict::Informational,
            measured: Map::new(),
            tolerance: Map::new(),
            witness: None,
            notes: Vec::new(),
        }
    }

    pub fn measure(mut self, key: &str, value: impl Serialize) -> Self {
        self.measured.insert(key.to_string(), to_value(value));
        self
    }

    pub fn tolerance(mut self, key: &str, value: impl Serialize) -> Self {
        self.tolerance.insert(key.to_string(), to_value(value));
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    pub fn witness(mut self, value: impl Serialize) -> Self {
        self.witness = Some(to_value(value));
        self
    }

    pub fn with_verdict(mut self, verdict: Verdict) -> Self {
        self.verdict = verdict;
        self
    }

    /// Pass if `ok`, otherwise fail.
    pub fn check(self, ok: bool) -> Self {
        self.with_verdict(if ok { Verdict::Pass } else { Verdict::Fail })
    }

    pub fn is_fail(&self) -> bool {
        self.verdict == Verdict::Fail
    }

    pub fn is_pass(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Numeric measured value, if present.
    pub fn value(&self, key: &str) -> Option<f64> {
        self.measured.get(key).and_then(Value::as_f64)
    }
}

fn to_value(value: impl Serialize) -> Value {
    let v = serde_json::to_value(value).unwrap_or(Value::Null);
    // JSON has no infinities; keep them readable instead of silently null
    match v {
        Value::Null => Value::String("non-finite".into()),
        other => other,
    }
}

/// Findings document written by the audit command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindingsDocument {
    pub findings: Vec<AuditFinding>,
}

impl FindingsDocument {
    pub fn any_failed(&self) -> bool {
        self.findings.iter().any(AuditFinding::is_fail)
    }
}
