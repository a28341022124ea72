//! Structured experiment output.
//!
//! Reports serialise to JSON with a fixed key order: struct fields in
//! declaration order, `parameters` sorted by key. Timing is opt-in so that two
//! runs with the same inputs produce identical bytes.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
    /// All stable local automorphisms at the stated radius were affine.
    Normal,
    NonNormal,
    Distorted,
    Undistorted,
}

impl Verdict {
    /// Whether the verdict reports a failed claim.
    pub fn is_failure(self) -> bool {
        matches!(self, Verdict::Fail)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub claim: String,
    pub verdict: Verdict,
    pub witnesses: Vec<Value>,
    pub parameters: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

impl Report {
    pub fn new(claim: impl Into<String>, verdict: Verdict) -> Self {
        Report {
            claim: claim.into(),
            verdict,
            witnesses: Vec::new(),
            parameters: BTreeMap::new(),
            notes: Vec::new(),
            runtime_ms: None,
        }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.parameters.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(Value::Null),
        );
        self
    }

    pub fn witness(mut self, value: impl Serialize) -> Self {
        self.witnesses
            .push(serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        matches!(self.verdict, Verdict::Pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialise")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape_is_stable() {
        let r = Report::new("demo", Verdict::NonNormal)
            .param("r", 4)
            .param("kmax", 6)
            .witness("1,0");
        let json = r.to_json();
        assert!(json.contains("\"verdict\": \"non-normal\""));
        let kmax = json.find("kmax").unwrap();
        let rpos = json.find("\"r\"").unwrap();
        assert!(kmax < rpos, "parameters are key-sorted");
        assert!(!json.contains("runtime_ms"));
    }
}
