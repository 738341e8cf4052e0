//! The `spirallab-report/1` document.

use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;

use crate::inputs::InputsEcho;

pub const SCHEMA: &str = "spirallab-report/1";

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub verdict: String,
    pub details: Value,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, passed: bool, verdict: impl Into<String>, details: impl Serialize) -> Self {
        Self {
            name: name.into(),
            passed,
            verdict: verdict.into(),
            details: serde_json::to_value(details).unwrap_or(Value::Null),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDoc {
    pub schema: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Value,
    pub inputs: InputsEcho,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl ReportDoc {
    pub fn new(command: &str, config: Value, inputs: InputsEcho, checks: Vec<CheckResult>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self {
            schema: SCHEMA,
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            config,
            inputs,
            checks,
            passed,
            timing: None,
        }
    }

    pub fn to_json(&self) -> anyhow::Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    /// Writes to `out`, or to stdout when no path is given.
    pub fn emit(&self, out: Option<&Path>) -> anyhow::Result<()> {
        let text = self.to_json()?;
        match out {
            Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    /// One line per check on the diagnostics stream.
    pub fn summarize(&self) {
        for c in &self.checks {
            eprintln!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.verdict);
        }
    }
}
