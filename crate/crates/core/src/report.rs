//! Validation report envelope shared by all validators: a validator-named
//! object carrying status, summary, flags, metrics, and a UTC timestamp.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

/// Validation outcome, ordered so `max` picks the worst.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Warn => "warn",
            Status::Fail => "fail",
        })
    }
}

/// One validator's report. `flags` holds named booleans, `metrics` holds
/// arbitrary diagnostic values; both keep insertion order on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    #[serde(skip)]
    pub validator: String,
    pub status: Status,
    pub summary: String,
    pub flags: Map<String, Value>,
    pub metrics: Map<String, Value>,
    pub checked_at: String,
}

/// Current UTC time in the report timestamp format.
pub fn utc_now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Micros, true)
}

impl ValidationReport {
    pub fn new(validator: impl Into<String>, status: Status, summary: impl Into<String>) -> Self {
        ValidationReport {
            validator: validator.into(),
            status,
            summary: summary.into(),
            flags: Map::new(),
            metrics: Map::new(),
            checked_at: utc_now(),
        }
    }

    pub fn flag(&mut self, name: impl Into<String>, set: bool) -> &mut Self {
        self.flags.insert(name.into(), Value::Bool(set));
        self
    }

    pub fn metric(&mut self, name: impl Into<String>, value: impl Into<Value>) -> &mut Self {
        self.metrics.insert(name.into(), value.into());
        self
    }

    /// Names of flags currently set to true.
    pub fn set_flags(&self) -> Vec<&str> {
        self.flags
            .iter()
            .filter(|(_, v)| v.as_bool() == Some(true))
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn is_flag_set(&self, name: &str) -> bool {
        self.flags.get(name).and_then(Value::as_bool) == Some(true)
    }

    /// The envelope body: `{status, summary, flags, metrics, checked_at}`.
    pub fn envelope(&self) -> Value {
        json!({
            "status": self.status,
            "summary": self.summary,
            "flags": self.flags,
            "metrics": self.metrics,
            "checked_at": self.checked_at,
        })
    }

    /// The validator-named wire object: `{"<validator>": {envelope}}`.
    pub fn keyed(&self) -> Value {
        json!({ &self.validator: self.envelope() })
    }
}

/// Worst status across reports (empty input passes).
pub fn aggregate_status<'a>(reports: impl IntoIterator<Item = &'a ValidationReport>) -> Status {
    reports
        .into_iter()
        .map(|r| r.status)
        .max()
        .unwrap_or(Status::Pass)
}
