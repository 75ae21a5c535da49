//! Workloads shared by the benchmarks: synthetic structures and suites of
//! arbitrary size built from the synthetic reference programs.

use chemprog_core::evalstats::ConfusionCounts;
use chemprog_core::suite::{ClassStats, SuiteProgram};
use chemprog_core::synthetic::synthetic_ontology;
use chemprog_core::{parse_program, ProgramSuite};

/// `count` distinct, parseable SMILES.
pub fn smiles_corpus(count: usize, seed: u64) -> Vec<String> {
    synthetic_ontology(count, seed)
        .entries
        .into_iter()
        .filter(|e| e.id.starts_with("SYNS:"))
        .filter_map(|e| e.smiles)
        .collect()
}

/// A suite of `size` programs, cycling through the reference programs under
/// fresh class ids.
pub fn suite_of(size: usize) -> ProgramSuite {
    let texts: Vec<String> = synthetic_ontology(0, 0).programs.into_values().collect();
    let mut suite = ProgramSuite::new("bench");
    for k in 0..size {
        let mut program = parse_program(&texts[k % texts.len()]).expect("reference program parses");
        program.class_id = format!("BENCH:{k:04}");
        let counts = ConfusionCounts::new(9, 1, 89, 1);
        suite.insert(SuiteProgram {
            stats: ClassStats {
                class_id: program.class_id.clone(),
                class_name: program.class_name.clone(),
                experiment: "bench".to_string(),
                train_counts: counts,
                train_metrics: counts.metrics(),
                attempts_used: 1,
                reached_threshold: true,
                best_attempt: 1,
                positives_scored: 10,
                negatives_scored: 90,
                negative_sample_cap: None,
            },
            program,
        });
    }
    suite
}
