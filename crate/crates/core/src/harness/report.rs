//! Verdict reports: hard and informational checks with provenance and a content fingerprint.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::bumps::{BumpReport, NecessityConstants, SeparatedReport};
use crate::error::Result;
use crate::operators::NormEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Informational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub values: Map<String, Value>,
}

impl Check {
    pub fn hard(name: &str, ok: bool, values: Map<String, Value>) -> Check {
        Check { name: name.into(), status: if ok { Status::Pass } else { Status::Fail }, values }
    }

    pub fn info(name: &str, values: Map<String, Value>) -> Check {
        Check { name: name.into(), status: Status::Informational, values }
    }

    pub fn is_hard(&self) -> bool {
        self.status != Status::Informational
    }
}

/// Builds a JSON object from key/value pairs.
#[macro_export]
#[doc(hidden)]
macro_rules! values {
    ($($k:expr => $v:expr),* $(,)?) => {{
        let mut m = serde_json::Map::new();
        $( m.insert($k.to_string(), serde_json::json!($v)); )*
        m
    }};
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the scenario's canonical JSON.
    pub scenario_sha256: String,
    pub n: usize,
    pub depth: u32,
    pub shifts: usize,
    pub seed: u64,
    pub toolkit_version: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictReport {
    pub schema_version: u32,
    pub scenario: String,
    /// Full bump constant for unbumped or explicit gauges.
    pub k: Option<BumpReport>,
    /// Separated preset constant.
    pub separated: Option<SeparatedReport>,
    pub necessity: NecessityConstants,
    pub norm: Option<NormEstimate>,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub provenance: Provenance,
    /// Excluded from the fingerprint.
    pub timestamp: String,
    /// SHA-256 of the report with `timestamp` and `fingerprint` blanked.
    pub fingerprint: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn now_stamp() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("unix:{secs}")
}

impl VerdictReport {
    pub fn hard_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.is_hard())
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail).collect()
    }

    /// Hash of the report content, independent of the timestamp.
    pub fn compute_fingerprint(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.timestamp.clear();
        copy.fingerprint.clear();
        Ok(sha256_hex(serde_json::to_string(&copy)?.as_bytes()))
    }

    pub fn seal(mut self) -> Result<Self> {
        self.passed = self.failures().is_empty();
        self.fingerprint = self.compute_fingerprint()?;
        Ok(self)
    }

    /// One CSV row per check: `scenario,check,status,key,value`.
    pub fn checks_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["scenario", "check", "status", "key", "value"])?;
        for c in &self.checks {
            let status = serde_json::to_value(c.status)?;
            let status = status.as_str().unwrap_or_default().to_string();
            if c.values.is_empty() {
                w.write_record([self.scenario.as_str(), &c.name, &status, "", ""])?;
            }
            for (k, v) in &c.values {
                let v = match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                w.write_record([self.scenario.as_str(), &c.name, &status, k, &v])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }
}
