use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VIOLATIONS: i32 = 2;
pub const EXIT_REGION_FAILED: i32 = 3;

/// Every setting a run depended on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub input: String,
    /// `"rational"` or `"float"`.
    pub mode: String,
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub parameters: Map<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub config: ConfigEcho,
    pub status: String,
    pub exit_code: i32,
    pub summary: Vec<String>,
    pub results: Value,
    /// Files written by the run, relative to the output directory.
    pub artifacts: Vec<String>,
    pub timing: Timing,
}

impl RunReport {
    pub fn new(command: &str, config: ConfigEcho) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            status: "ok".into(),
            exit_code: EXIT_OK,
            summary: Vec::new(),
            results: Value::Null,
            artifacts: Vec::new(),
            timing: Timing { wall_seconds: 0.0 },
        }
    }

    pub fn fail(&mut self, status: &str, code: i32) {
        self.status = status.into();
        self.exit_code = code;
    }

    pub fn say(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    /// The report as JSON with the timing block removed, for comparing runs.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("reports serialize");
        if let Value::Object(m) = &mut v {
            m.remove("timing");
        }
        serde_json::to_string(&v).expect("reports serialize")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing report {}", path.display()))
    }
}
