//! Artifact writing: CSV tables with fixed float formatting and the
//! append-only run manifest.

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Float with 17 significant digits, enough to round-trip any `f64`.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Optional float; `None` becomes an empty field.
pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

/// Writes a CSV file with the given header inside the output directory.
pub fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(path)
}

/// Writes a pretty-printed JSON document inside the output directory.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Status of one task (a grid cell or an output stage).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskState {
    Ok,
    Failed,
    /// Completed by an earlier invocation and not recomputed.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskStatus {
    pub id: String,
    pub status: TaskState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    /// Files produced by the task, relative to the output directory.
    #[serde(default)]
    pub files: Vec<String>,
}

/// One line of `manifest.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
pub enum ManifestRecord {
    Start {
        command: String,
        tool_version: String,
        config_hash: String,
        threads: usize,
        config: serde_json::Value,
    },
    Task(TaskStatus),
    Finish(RunManifest),
}

/// Summary of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub tool_version: String,
    pub wall_seconds: f64,
    pub tasks: Vec<TaskStatus>,
    /// Every output file of the run (relative paths), each listed once.
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn failed(&self) -> usize {
        self.tasks.iter().filter(|t| t.status == TaskState::Failed).count()
    }
}

pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// Appends records to `manifest.jsonl` and collects the run summary.
pub struct Recorder {
    dir: PathBuf,
    file: File,
    command: String,
    config_hash: String,
    started: Instant,
    tasks: Vec<TaskStatus>,
    files: BTreeSet<String>,
    progress: bool,
}

impl Recorder {
    pub fn start(
        dir: &Path,
        command: &str,
        config: &crate::config::ExperimentConfig,
        threads: usize,
        progress: bool,
    ) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join(MANIFEST_FILE))
            .with_context(|| format!("opening the manifest in {}", dir.display()))?;
        let mut rec = Self {
            dir: dir.to_path_buf(),
            file,
            command: command.into(),
            config_hash: config.hash(),
            started: Instant::now(),
            tasks: Vec::new(),
            files: BTreeSet::new(),
            progress,
        };
        rec.append(&ManifestRecord::Start {
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_hash: rec.config_hash.clone(),
            threads,
            config: serde_json::to_value(config)?,
        })?;
        Ok(rec)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn append(&mut self, record: &ManifestRecord) -> Result<()> {
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        Ok(())
    }

    fn relative(&self, path: &Path) -> String {
        path.strip_prefix(&self.dir).unwrap_or(path).to_string_lossy().into_owned()
    }

    /// Records a finished task and the files it wrote.
    pub fn task(&mut self, id: &str, outcome: Result<Vec<PathBuf>, String>) -> Result<()> {
        let status = match outcome {
            Ok(paths) => {
                let files: Vec<String> = paths.iter().map(|p| self.relative(p)).collect();
                self.files.extend(files.iter().cloned());
                TaskStatus { id: id.into(), status: TaskState::Ok, message: None, files }
            }
            Err(message) => TaskStatus { id: id.into(), status: TaskState::Failed, message: Some(message), files: vec![] },
        };
        if self.progress {
            eprintln!("[{}] {} {:?}", self.command, status.id, status.status);
        }
        self.append(&ManifestRecord::Task(status.clone()))?;
        self.tasks.push(status);
        Ok(())
    }

    /// Records a task completed by an earlier invocation.
    pub fn skipped(&mut self, id: &str, files: Vec<String>) -> Result<()> {
        self.files.extend(files.iter().cloned());
        let status = TaskStatus { id: id.into(), status: TaskState::Skipped, message: None, files };
        if self.progress {
            eprintln!("[{}] {} skipped", self.command, status.id);
        }
        self.append(&ManifestRecord::Task(status.clone()))?;
        self.tasks.push(status);
        Ok(())
    }

    /// Registers a file written outside any task (e.g. an aggregate table).
    pub fn file(&mut self, path: &Path) {
        let rel = self.relative(path);
        self.files.insert(rel);
    }

    pub fn finish(mut self) -> Result<RunManifest> {
        let manifest = RunManifest {
            command: self.command.clone(),
            config_hash: self.config_hash.clone(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            wall_seconds: self.started.elapsed().as_secs_f64(),
            tasks: std::mem::take(&mut self.tasks),
            files: self.files.iter().cloned().collect(),
        };
        self.append(&ManifestRecord::Finish(manifest.clone()))?;
        Ok(manifest)
    }
}

/// Reads every record of an existing manifest; a missing file yields none.
/// A truncated last line (interrupted write) is ignored.
pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestRecord>> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Ok(Vec::new());
    }
    let reader = BufReader::new(File::open(&path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(r) => out.push(r),
            Err(_) => break,
        }
    }
    Ok(out)
}
