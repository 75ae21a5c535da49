//! On-disk program suites: one program file per class plus a stats sidecar,
//! an attempt log and a manifest.
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/programs/<class>.c3p
//! <dir>/stats/<class>.json
//! <dir>/attempts/<class>.json
//! ```
//!
//! Everything is written in sorted order with no timestamps, so identical
//! suites produce identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evalstats::{ConfusionCounts, MetricSet};
use crate::program::{parse_program, AttemptRecord, ClassifierProgram, ProgramError};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PROGRAMS_DIR: &str = "programs";
pub const STATS_DIR: &str = "stats";
pub const ATTEMPTS_DIR: &str = "attempts";

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Json { path: String, message: String },
    #[error("{path}: {source}")]
    Program { path: String, source: ProgramError },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("class ids {first:?} and {second:?} map to the same file name")]
    FileNameClash { first: String, second: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SuiteError + '_ {
    move |source| SuiteError::Io { path: path.display().to_string(), source }
}

/// Training-time statistics stored next to each program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub class_id: String,
    pub class_name: String,
    /// Experiment (configuration) that produced the program.
    pub experiment: String,
    pub train_counts: ConfusionCounts,
    pub train_metrics: MetricSet,
    pub attempts_used: u32,
    pub reached_threshold: bool,
    /// Attempt whose program was kept.
    pub best_attempt: u32,
    pub positives_scored: usize,
    pub negatives_scored: usize,
    /// Cap applied to negatives during scoring, if any.
    pub negative_sample_cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub name: String,
    pub experiments: Vec<String>,
    /// Free-form description of how the suite was made (configuration,
    /// benchmark location). Must not contain volatile data.
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
    pub classes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteProgram {
    pub program: ClassifierProgram,
    pub stats: ClassStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramSuite {
    pub manifest: SuiteManifest,
    pub programs: BTreeMap<String, SuiteProgram>,
}

/// File-system-safe stem for a class id (`CHEBI:18310` becomes `CHEBI_18310`).
pub fn file_stem(class_id: &str) -> String {
    class_id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}

pub fn program_path(dir: &Path, class_id: &str) -> PathBuf {
    dir.join(PROGRAMS_DIR).join(format!("{}.c3p", file_stem(class_id)))
}

pub fn stats_path(dir: &Path, class_id: &str) -> PathBuf {
    dir.join(STATS_DIR).join(format!("{}.json", file_stem(class_id)))
}

pub fn attempts_path(dir: &Path, class_id: &str) -> PathBuf {
    dir.join(ATTEMPTS_DIR).join(format!("{}.json", file_stem(class_id)))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), SuiteError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    write_atomically(path, text.as_bytes())
}

/// Writes through a temporary file so an interrupted run never leaves a
/// truncated file behind.
fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), SuiteError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, SuiteError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text)
        .map_err(|e| SuiteError::Json { path: path.display().to_string(), message: e.to_string() })
}

/// Persists one class. The stats file is written last and marks the class
/// as finished.
pub fn write_class(dir: &Path, entry: &SuiteProgram) -> Result<(), SuiteError> {
    let class_id = &entry.program.class_id;
    write_atomically(&program_path(dir, class_id), entry.program.to_text().as_bytes())?;
    write_json(&attempts_path(dir, class_id), &entry.program.attempt_history)?;
    write_json(&stats_path(dir, class_id), &entry.stats)
}

pub fn read_class(dir: &Path, class_id: &str) -> Result<SuiteProgram, SuiteError> {
    let path = program_path(dir, class_id);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let mut program =
        parse_program(&text).map_err(|source| SuiteError::Program { path: path.display().to_string(), source })?;
    let attempts = attempts_path(dir, class_id);
    if attempts.exists() {
        program.attempt_history = read_json::<Vec<AttemptRecord>>(&attempts)?;
    }
    let stats = read_json(&stats_path(dir, class_id))?;
    Ok(SuiteProgram { program, stats })
}

/// Whether a finished class record exists on disk.
pub fn class_finished(dir: &Path, class_id: &str) -> bool {
    stats_path(dir, class_id).is_file() && program_path(dir, class_id).is_file()
}

pub fn write_manifest(dir: &Path, manifest: &SuiteManifest) -> Result<(), SuiteError> {
    write_json(&dir.join(MANIFEST_FILE), manifest)
}

impl ProgramSuite {
    pub fn new(name: &str) -> Self {
        ProgramSuite {
            manifest: SuiteManifest {
                name: name.to_string(),
                experiments: Vec::new(),
                metadata: BTreeMap::new(),
                classes: Vec::new(),
            },
            programs: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, entry: SuiteProgram) {
        let id = entry.program.class_id.clone();
        if !self.manifest.experiments.contains(&entry.stats.experiment) {
            self.manifest.experiments.push(entry.stats.experiment.clone());
            self.manifest.experiments.sort();
        }
        self.programs.insert(id, entry);
        self.manifest.classes = self.programs.keys().cloned().collect();
    }

    pub fn len(&self) -> usize {
        self.programs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.programs.is_empty()
    }

    pub fn save(&self, dir: &Path) -> Result<(), SuiteError> {
        let mut stems: BTreeMap<String, &str> = BTreeMap::new();
        for id in self.programs.keys() {
            if let Some(first) = stems.insert(file_stem(id), id) {
                return Err(SuiteError::FileNameClash { first: first.to_string(), second: id.clone() });
            }
        }
        for entry in self.programs.values() {
            write_class(dir, entry)?;
        }
        let mut manifest = self.manifest.clone();
        manifest.classes = self.programs.keys().cloned().collect();
        write_manifest(dir, &manifest)
    }

    pub fn load(dir: &Path) -> Result<Self, SuiteError> {
        let manifest: SuiteManifest = read_json(&dir.join(MANIFEST_FILE))?;
        let mut programs = BTreeMap::new();
        for id in &manifest.classes {
            programs.insert(id.clone(), read_class(dir, id)?);
        }
        Ok(ProgramSuite { manifest, programs })
    }
}
