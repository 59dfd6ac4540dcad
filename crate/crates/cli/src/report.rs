use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;

/// One checked identity at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    /// Identity group, e.g. `determinant_identity`.
    pub identity: String,
    /// Specific check within the group.
    pub name: String,
    pub parameters: BTreeMap<String, Value>,
    pub residual: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_order: Option<f64>,
    pub pass: bool,
    /// Wall-clock time of the check; like the timestamp, not reproducible.
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub tool_version: String,
    pub os: String,
    pub arch: String,
}

impl Environment {
    pub fn current() -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub timestamp: String,
    pub environment: Environment,
    pub config: RunConfig,
    /// The kernel as loaded, with derived constants.
    pub kernel: Value,
    pub selection: String,
    pub tolerance_profile: String,
    pub entries: Vec<Entry>,
    pub passed: usize,
    pub failed: usize,
    pub all_passed: bool,
}

impl VerificationReport {
    pub fn new(config: RunConfig, kernel: Value, selection: &str, profile: &str, entries: Vec<Entry>) -> Self {
        let passed = entries.iter().filter(|e| e.pass).count();
        let failed = entries.len() - passed;
        Self {
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            environment: Environment::current(),
            config,
            kernel,
            selection: selection.to_string(),
            tolerance_profile: profile.to_string(),
            entries,
            passed,
            failed,
            all_passed: failed == 0,
        }
    }
}

/// Removes the fields that legitimately differ between identical runs:
/// `timestamp` and every `runtime_ms`.
pub fn strip_volatile(report: &mut Value) {
    if let Some(obj) = report.as_object_mut() {
        obj.remove("timestamp");
        if let Some(Value::Array(entries)) = obj.get_mut("entries") {
            for e in entries {
                if let Some(o) = e.as_object_mut() {
                    o.remove("runtime_ms");
                }
            }
        }
    }
}
