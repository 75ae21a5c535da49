//! Batch classification of SMILES against a program suite, and evaluation
//! of a suite on a benchmark's validation split.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmark::Benchmark;
use crate::evalstats::{confidence, ConfusionCounts};
use crate::molgraph::{parse_smiles, Molecule};
use crate::program::{evaluate, ClassifierProgram};
use crate::suite::ProgramSuite;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRow {
    pub smiles: String,
    pub class_id: String,
    pub class_name: String,
    pub membership: bool,
    pub confidence: f64,
    pub reason: String,
}

/// All rows for one input, or the reason it could not be parsed.
#[derive(Debug, Clone, PartialEq)]
pub enum StructureResult {
    Rows(Vec<ClassificationRow>),
    Invalid { smiles: String, error: String },
}

/// Classifies structures against a suite, counting SMILES parses.
pub struct Classifier<'a> {
    suite: &'a ProgramSuite,
    parses: AtomicUsize,
}

impl<'a> Classifier<'a> {
    pub fn new(suite: &'a ProgramSuite) -> Self {
        Classifier { suite, parses: AtomicUsize::new(0) }
    }

    /// Number of SMILES parsed so far.
    pub fn parse_count(&self) -> usize {
        self.parses.load(Ordering::Relaxed)
    }

    /// Parses once and runs every program on the shared molecule; rows come
    /// in class id order.
    pub fn classify_structure(&self, smiles: &str) -> StructureResult {
        self.parses.fetch_add(1, Ordering::Relaxed);
        match parse_smiles(smiles) {
            Ok(mol) => StructureResult::Rows(self.rows_for(smiles, &mol)),
            Err(e) => StructureResult::Invalid { smiles: smiles.to_string(), error: e.to_string() },
        }
    }

    fn rows_for(&self, smiles: &str, mol: &Molecule) -> Vec<ClassificationRow> {
        self.suite
            .programs
            .iter()
            .map(|(class_id, entry)| {
                let result = evaluate(&entry.program, mol);
                ClassificationRow {
                    smiles: smiles.to_string(),
                    class_id: class_id.clone(),
                    class_name: entry.program.class_name.clone(),
                    membership: result.membership,
                    confidence: confidence(&entry.stats.train_counts, result.membership),
                    reason: result.reason,
                }
            })
            .collect()
    }

    /// Classifies inputs on `parallelism` threads; results keep input order.
    /// Repeated SMILES are parsed and evaluated once.
    pub fn classify_batch<S: AsRef<str> + Sync>(&self, inputs: &[S], parallelism: usize) -> Vec<StructureResult> {
        let mut slots: HashMap<&str, usize> = HashMap::new();
        let mut distinct: Vec<&str> = Vec::new();
        let index: Vec<usize> = inputs
            .iter()
            .map(|s| {
                *slots.entry(s.as_ref()).or_insert_with(|| {
                    distinct.push(s.as_ref());
                    distinct.len() - 1
                })
            })
            .collect();
        let results: Vec<StructureResult> = if parallelism <= 1 {
            distinct.iter().map(|s| self.classify_structure(s)).collect()
        } else {
            match rayon::ThreadPoolBuilder::new().num_threads(parallelism).build() {
                Ok(pool) => pool.install(|| distinct.par_iter().map(|s| self.classify_structure(s)).collect()),
                Err(e) => {
                    log::warn!("could not start {parallelism} threads ({e}); classifying sequentially");
                    distinct.iter().map(|s| self.classify_structure(s)).collect()
                }
            }
        };
        index.into_iter().map(|k| results[k].clone()).collect()
    }
}

pub fn classify_structure(suite: &ProgramSuite, smiles: &str) -> StructureResult {
    Classifier::new(suite).classify_structure(smiles)
}

pub fn classify_batch<S: AsRef<str> + Sync>(
    suite: &ProgramSuite,
    inputs: &[S],
    parallelism: usize,
) -> Vec<StructureResult> {
    Classifier::new(suite).classify_batch(inputs, parallelism)
}

fn tsv_field(text: &str) -> String {
    text.replace(['\t', '\n', '\r'], " ")
}

/// Writes `smiles, class_id, class_name, membership, confidence, reason`
/// rows with a header. Invalid inputs get one row with membership `invalid`.
pub fn write_tsv<W: Write>(out: &mut W, results: &[StructureResult]) -> io::Result<()> {
    writeln!(out, "smiles\tclass_id\tclass_name\tmembership\tconfidence\treason")?;
    for result in results {
        match result {
            StructureResult::Rows(rows) => {
                for r in rows {
                    writeln!(
                        out,
                        "{}\t{}\t{}\t{}\t{:.4}\t{}",
                        tsv_field(&r.smiles),
                        tsv_field(&r.class_id),
                        tsv_field(&r.class_name),
                        r.membership,
                        r.confidence,
                        tsv_field(&r.reason)
                    )?;
                }
            }
            StructureResult::Invalid { smiles, error } => {
                writeln!(out, "{}\t\t\tinvalid\t\t{}", tsv_field(smiles), tsv_field(error))?;
            }
        }
    }
    Ok(())
}

/// Writes one JSON object per row; invalid inputs become
/// `{"smiles": ..., "invalid": true, "error": ...}`.
pub fn write_json_lines<W: Write>(out: &mut W, results: &[StructureResult]) -> io::Result<()> {
    for result in results {
        match result {
            StructureResult::Rows(rows) => {
                for r in rows {
                    serde_json::to_writer(&mut *out, r)?;
                    out.write_all(b"\n")?;
                }
            }
            StructureResult::Invalid { smiles, error } => {
                let value = serde_json::json!({"smiles": smiles, "invalid": true, "error": error});
                serde_json::to_writer(&mut *out, &value)?;
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

/// Confusion counts of each program on the benchmark's validation
/// structures. Programs for classes absent from the benchmark are skipped.
/// Unparseable structures count as predicted non-members.
pub fn evaluate_on_validation<'p>(
    programs: impl IntoIterator<Item = (&'p String, &'p ClassifierProgram)>,
    benchmark: &Benchmark,
) -> BTreeMap<String, ConfusionCounts> {
    let programs: Vec<(&String, &ClassifierProgram)> =
        programs.into_iter().filter(|(id, _)| benchmark.classes.contains_key(*id)).collect();
    let validation: Vec<&str> = benchmark.validation_ids().collect();
    let per_structure: Vec<Vec<bool>> = validation
        .par_iter()
        .map(|id| {
            let mol = parse_smiles(&benchmark.structures[*id].smiles).ok();
            programs.iter().map(|(_, p)| mol.as_ref().is_some_and(|m| evaluate(p, m).membership)).collect()
        })
        .collect();
    let mut out = BTreeMap::new();
    for (k, (class_id, _)) in programs.iter().enumerate() {
        let positives = &benchmark.classes[*class_id].positive_ids;
        let mut counts = ConfusionCounts::default();
        for (id, predictions) in validation.iter().zip(&per_structure) {
            counts.record(predictions[k], positives.contains(*id));
        }
        out.insert((*class_id).clone(), counts);
    }
    out
}

pub fn evaluate_suite(suite: &ProgramSuite, benchmark: &Benchmark) -> BTreeMap<String, ConfusionCounts> {
    evaluate_on_validation(suite.programs.iter().map(|(id, e)| (id, &e.program)), benchmark)
}
