//! Run directories and the JSON report that indexes their artifacts.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use super::{CellResult, HarnessError, RunConfig};

/// Creates `<out_dir>/<UTC timestamp>-<label>`, adding a numeric suffix if
/// that name is taken.
pub fn create_run_dir(out_dir: &Path, label: &str) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(out_dir)?;
    let stamp = chrono::Utc::now().format("%Y%m%d-%H%M%S");
    let base = format!("{stamp}-{label}");
    for k in 0.. {
        let name = if k == 0 { base.clone() } else { format!("{base}-{k}") };
        let dir = out_dir.join(name);
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!()
}

/// Top-level record of a run: what was asked for, the seeds, per-cell
/// results, experiment-specific tables, a summary and every file written.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub id: String,
    pub name: String,
    pub created: String,
    pub seeds: Vec<u64>,
    pub config: RunConfig,
    pub cells: Vec<CellResult>,
    pub rows: Vec<Value>,
    pub summary: Map<String, Value>,
    /// Paths relative to the run directory.
    pub artifacts: Vec<PathBuf>,
    #[serde(skip)]
    dir: PathBuf,
}

impl ExperimentReport {
    pub fn new(id: &str, name: &str, config: &RunConfig, dir: &Path) -> Self {
        ExperimentReport {
            id: id.to_string(),
            name: name.to_string(),
            created: chrono::Utc::now().to_rfc3339(),
            seeds: Vec::new(),
            config: config.clone(),
            cells: Vec::new(),
            rows: Vec::new(),
            summary: Map::new(),
            artifacts: Vec::new(),
            dir: dir.to_path_buf(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(Value::as_f64)
    }

    pub fn get_bool(&self, key: &str) -> Option<bool> {
        self.summary.get(key).and_then(Value::as_bool)
    }

    pub fn add_row(&mut self, row: impl Serialize) {
        if let Ok(v) = serde_json::to_value(row) {
            self.rows.push(v);
        }
    }

    pub fn add_artifact(&mut self, path: &Path) {
        let rel = path.strip_prefix(&self.dir).unwrap_or(path).to_path_buf();
        if !self.artifacts.contains(&rel) {
            self.artifacts.push(rel);
        }
    }

    /// Adds each cell and the files in its directory.
    pub fn add_cells(&mut self, cells: Vec<CellResult>) {
        for c in &cells {
            for name in ["curve.csv", "episodes.csv", "config.toml"] {
                let p = c.dir.join(name);
                if p.exists() {
                    self.add_artifact(&p);
                }
            }
            if let Some(p) = &c.policy {
                self.add_artifact(p);
            }
        }
        self.cells.extend(cells);
    }

    /// Writes rows as CSV under the run directory and records the file.
    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<PathBuf, HarnessError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| HarnessError::Run(format!("{}: {e}", path.display())))?;
        for r in rows {
            w.serialize(r).map_err(|e| HarnessError::Run(format!("{}: {e}", path.display())))?;
        }
        w.flush()?;
        self.add_artifact(&path);
        Ok(path)
    }

    pub fn write(&self) -> Result<PathBuf, HarnessError> {
        let path = self.dir.join("report.json");
        let text = serde_json::to_string_pretty(self).map_err(|e| HarnessError::Run(e.to_string()))?;
        std::fs::write(&path, text)?;
        Ok(path)
    }
}
