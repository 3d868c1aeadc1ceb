//! Run configuration and artifact output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{LabError, LabResult};

/// Everything needed to reproduce a run. Embedded in every artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    /// Input files by role.
    pub inputs: BTreeMap<String, String>,
    pub out_dir: String,
    pub seed: u64,
    pub tol: f64,
    pub mc_samples: u64,
    pub steps: usize,
    pub kappa: f64,
    pub rho: f64,
    pub mu: f64,
    pub n: usize,
    pub eps_grid: Vec<f64>,
    /// Subcommand-specific settings.
    pub options: BTreeMap<String, Value>,
}

impl RunConfig {
    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub bytes: usize,
}

/// Writes artifacts into the output directory and records them for the
/// manifest.
pub struct Artifacts {
    dir: PathBuf,
    config: RunConfig,
    written: Vec<ArtifactEntry>,
}

impl Artifacts {
    pub fn new(config: RunConfig) -> LabResult<Self> {
        let dir = PathBuf::from(&config.out_dir);
        std::fs::create_dir_all(&dir).map_err(|e| LabError::io(dir.display().to_string(), e))?;
        Ok(Artifacts {
            dir,
            config,
            written: Vec::new(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> LabResult<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| LabError::io(path.display().to_string(), e))?;
        self.written.push(ArtifactEntry {
            file: name.into(),
            bytes: bytes.len(),
        });
        Ok(path)
    }

    /// Writes `{"config": ..., <fields of body>}`.
    pub fn write_json(&mut self, name: &str, body: Value) -> LabResult<PathBuf> {
        let mut obj = serde_json::Map::new();
        obj.insert("config".into(), self.config.to_value());
        match body {
            Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("result".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(obj)).expect("json serializes");
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// Writes `manifest.json`; the timestamp appears only here.
    pub fn finish(mut self, summary: Value) -> LabResult<PathBuf> {
        let created = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = serde_json::json!({
            "config": self.config.to_value(),
            "artifacts": self.written,
            "summary": summary,
            "created_unix": created,
            "version": env!("CARGO_PKG_VERSION"),
            "threads": rayon::current_num_threads(),
        });
        let mut text = serde_json::to_string_pretty(&manifest).expect("json serializes");
        text.push('\n');
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text).map_err(|e| LabError::io(path.display().to_string(), e))?;
        self.written.clear();
        Ok(path)
    }
}
