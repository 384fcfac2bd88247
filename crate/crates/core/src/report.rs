//! Check records shared by every suite.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

/// Outcome of one invariant or oracle check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// hard checks decide the exit status
    #[serde(default = "yes")]
    pub hard: bool,
    #[serde(default)]
    pub fitted: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

fn yes() -> bool {
    true
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool) -> Self {
        Check {
            name: name.into(),
            passed,
            hard: true,
            fitted: BTreeMap::new(),
            witness: None,
            note: String::new(),
        }
    }

    /// Records a fitted constant; non-finite values serialize as null.
    pub fn fit(mut self, key: &str, v: f64) -> Self {
        self.fitted.insert(key.to_string(), rounded(v));
        self
    }

    pub fn witness(mut self, w: impl Serialize) -> Self {
        self.witness = serde_json::to_value(w).ok();
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.note = s.into();
        self
    }

    pub fn soft(mut self) -> Self {
        self.hard = false;
        self
    }

    /// Failed check built from an error.
    pub fn from_error(name: impl Into<String>, e: &crate::Error) -> Self {
        Check::new(name, false).note(e.to_string())
    }
}

/// JSON number for finite values, null otherwise.
pub fn rounded(v: f64) -> Value {
    if v.is_finite() {
        Value::from(v)
    } else {
        Value::Null
    }
}
