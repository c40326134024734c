//! Run manifests: every command records its resolved configuration, inputs,
//! outputs, cumulative stage timings, and summary stats beside its artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use bi_core::{Error, Result};

#[derive(Serialize)]
pub struct StageTiming {
    pub stage: String,
    /// Milliseconds since command start at stage completion (monotone).
    pub at_ms: f64,
    /// Milliseconds spent in this stage.
    pub duration_ms: f64,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub timings: Vec<StageTiming>,
    pub stats: serde_json::Map<String, serde_json::Value>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        RunManifest {
            command: command.to_string(),
            config,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings: Vec::new(),
            stats: serde_json::Map::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn stat(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.stats.insert(key.to_string(), value.into());
    }

    /// Writes `manifest.json` into `out_dir` and records it as an output.
    pub fn write(mut self, out_dir: &Path, watch: Stopwatch) -> Result<PathBuf> {
        self.timings = watch.into_stages();
        let path = out_dir.join("manifest.json");
        self.outputs.push(path.display().to_string());
        let json = serde_json::to_string_pretty(&self)
            .map_err(|e| Error::format(&path, e.to_string()))?;
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// Wall-clock stage timer; `mark` closes the current stage.
pub struct Stopwatch {
    start: Instant,
    last_at: f64,
    stages: Vec<StageTiming>,
}

impl Stopwatch {
    pub fn new() -> Self {
        Stopwatch { start: Instant::now(), last_at: 0.0, stages: Vec::new() }
    }

    pub fn mark(&mut self, stage: &str) {
        let at_ms = self.start.elapsed().as_secs_f64() * 1e3;
        self.stages.push(StageTiming {
            stage: stage.to_string(),
            at_ms,
            duration_ms: at_ms - self.last_at,
        });
        self.last_at = at_ms;
    }

    fn into_stages(self) -> Vec<StageTiming> {
        self.stages
    }
}

/// Creates the output directory if needed.
pub fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}
