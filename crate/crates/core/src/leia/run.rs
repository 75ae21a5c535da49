use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;

use super::client::LlmClient;
use super::synth::synthesize_class;
use super::{LeiaConfig, SynthesisOutcome};
use crate::benchmark::Benchmark;
use crate::suite::{class_finished, read_class, write_class, write_manifest, ProgramSuite, SuiteError};

/// Result of a suite synthesis run.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRun {
    pub suite: ProgramSuite,
    /// Classes loaded from a previous, interrupted run instead of re-synthesized.
    pub resumed: Vec<String>,
    /// Classes that could not be synthesized, with the reason.
    pub failures: BTreeMap<String, String>,
}

impl SuiteRun {
    pub fn outcomes(&self) -> impl Iterator<Item = &SynthesisOutcome> {
        self.suite.programs.values()
    }
}

enum ClassResult {
    Done(Box<SynthesisOutcome>),
    Resumed(Box<SynthesisOutcome>),
    Failed(String),
}

/// Synthesizes a program for every listed class, `jobs` classes at a time.
///
/// With `out_dir`, each class is written as soon as it finishes and classes
/// already finished there are loaded instead of re-run. Failures are isolated
/// per class. Output bytes depend only on the inputs, never on `jobs`.
pub fn synthesize_suite(
    benchmark: &Benchmark,
    class_ids: &[String],
    config: &LeiaConfig,
    client: &dyn LlmClient,
    experiment: &str,
    out_dir: Option<&Path>,
    jobs: usize,
) -> Result<SuiteRun, SuiteError> {
    config.validate().map_err(SuiteError::Config)?;
    let ids: Vec<&String> = class_ids.iter().collect::<BTreeSet<_>>().into_iter().collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SuiteError::Config(e.to_string()))?;

    let run_one = |class_id: &String| -> ClassResult {
        if let Some(dir) = out_dir {
            if class_finished(dir, class_id) {
                return match read_class(dir, class_id) {
                    Ok(entry) => ClassResult::Resumed(Box::new(entry)),
                    Err(e) => ClassResult::Failed(format!("could not resume: {e}")),
                };
            }
        }
        let Some(class) = benchmark.classes.get(class_id) else {
            return ClassResult::Failed("class is not in the benchmark".to_string());
        };
        let (positives, negatives) = benchmark.train_examples(class_id).expect("class exists");
        if positives.is_empty() {
            return ClassResult::Failed("class has no positive training examples".to_string());
        }
        let outcome = synthesize_class(class, &positives, &negatives, config, client, experiment);
        if let Some(dir) = out_dir {
            if let Err(e) = write_class(dir, &outcome) {
                return ClassResult::Failed(format!("could not save: {e}"));
            }
        }
        ClassResult::Done(Box::new(outcome))
    };
    let results: Vec<(&String, ClassResult)> = pool.install(|| ids.par_iter().map(|&id| (id, run_one(id))).collect());

    let mut suite = ProgramSuite::new(experiment);
    suite.manifest.experiments.push(experiment.to_string());
    suite.manifest.metadata.insert("config".to_string(), serde_json::to_value(config).expect("serializable config"));
    let mut resumed = Vec::new();
    let mut failures = BTreeMap::new();
    for (id, result) in results {
        match result {
            ClassResult::Done(outcome) => suite.insert(*outcome),
            ClassResult::Resumed(outcome) => {
                resumed.push(id.clone());
                suite.insert(*outcome);
            }
            ClassResult::Failed(reason) => {
                log::error!("class {id}: {reason}");
                failures.insert(id.clone(), reason);
            }
        }
    }
    if let Some(dir) = out_dir {
        write_manifest(dir, &suite.manifest)?;
    }
    Ok(SuiteRun { suite, resumed, failures })
}
