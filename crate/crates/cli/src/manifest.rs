//! Run manifests written next to every dataset or clustering output.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use linkcoref::io::file_digest;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Every flag as parsed, defaults included.
    pub flags: serde_json::Value,
    /// SHA-256 per input file.
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 per output file.
    pub outputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub counts: serde_json::Value,
    /// Wall-clock milliseconds per stage. Not part of the reproducible
    /// output.
    pub timings_ms: BTreeMap<String, u64>,
}

impl RunManifest {
    pub fn new(subcommand: &str, flags: &impl Serialize) -> Self {
        RunManifest {
            tool: "linkcoref".into(),
            version: linkcoref::VERSION.into(),
            subcommand: subcommand.into(),
            flags: serde_json::to_value(flags).unwrap_or(serde_json::Value::Null),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            seed: None,
            counts: serde_json::Value::Null,
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let d = file_digest(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.insert(path.display().to_string(), d);
        Ok(())
    }

    /// Records `path` under `label` (usually relative to the output
    /// directory).
    pub fn output(&mut self, label: &str, path: &Path) -> Result<()> {
        self.outputs.insert(label.to_string(), file_digest(path)?);
        Ok(())
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings_ms.insert(stage.into(), start.elapsed().as_millis() as u64);
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }
}
