use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::client::{complete, LlmClient, LlmRequest};
use super::prompt::{build_feedback_prompt, build_initial_prompt, FeedbackContext, Misclassification, SYSTEM_PROMPT};
use super::{LeiaConfig, SynthesisOutcome};
use crate::benchmark::{ClassDataset, StructureRecord};
use crate::evalstats::{compute_metrics, ConfusionCounts, MetricSet};
use crate::molgraph::{parse_smiles, Molecule};
use crate::program::{
    check_program_text, evaluate, fixtures, Action, AttemptRecord, ClassificationResult, ClassifierProgram,
    INVALID_SMILES_REASON,
};
use crate::suite::ClassStats;

/// Reason given by the placeholder program kept when no attempt produced a
/// usable program.
pub const FALLBACK_REASON: &str = "No valid program was synthesized for this class";

/// A structure parsed once and reused across attempts.
#[derive(Debug, Clone)]
pub struct PreparedExample<'a> {
    pub record: &'a StructureRecord,
    pub mol: Option<Molecule>,
}

impl<'a> PreparedExample<'a> {
    pub fn prepare(records: &[&'a StructureRecord]) -> Vec<PreparedExample<'a>> {
        records.par_iter().map(|&record| PreparedExample { record, mol: parse_smiles(&record.smiles).ok() }).collect()
    }

    fn classify(&self, program: &ClassifierProgram) -> ClassificationResult {
        match &self.mol {
            Some(mol) => evaluate(program, mol),
            None => {
                ClassificationResult { membership: false, reason: INVALID_SMILES_REASON.to_string(), fired_rule: None }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub counts: ConfusionCounts,
    pub metrics: MetricSet,
    /// Sorted by structure id.
    pub false_positives: Vec<Misclassification>,
    pub false_negatives: Vec<Misclassification>,
    /// Parse or validation failure; the score is then zero.
    pub error: Option<String>,
}

impl ScoreReport {
    fn failed(error: String) -> Self {
        ScoreReport {
            counts: ConfusionCounts::default(),
            metrics: MetricSet::default(),
            false_positives: Vec::new(),
            false_negatives: Vec::new(),
            error: Some(error),
        }
    }
}

/// Scores a program (or the error that prevented one) on labelled examples.
pub fn score_program(
    program: Result<&ClassifierProgram, &str>,
    positives: &[PreparedExample<'_>],
    negatives: &[PreparedExample<'_>],
) -> ScoreReport {
    let program = match program {
        Ok(p) => p,
        Err(e) => return ScoreReport::failed(e.to_string()),
    };
    let judge = |examples: &[PreparedExample<'_>]| -> Vec<ClassificationResult> {
        examples.par_iter().map(|e| e.classify(program)).collect()
    };
    let mut counts = ConfusionCounts::default();
    let mut false_positives = Vec::new();
    let mut false_negatives = Vec::new();
    let miss = |e: &PreparedExample<'_>, r: ClassificationResult| Misclassification {
        id: e.record.id.clone(),
        name: e.record.name.clone(),
        smiles: e.record.smiles.clone(),
        reason: r.reason,
    };
    for (example, result) in positives.iter().zip(judge(positives)) {
        counts.record(result.membership, true);
        if !result.membership {
            false_negatives.push(miss(example, result));
        }
    }
    for (example, result) in negatives.iter().zip(judge(negatives)) {
        counts.record(result.membership, false);
        if result.membership {
            false_positives.push(miss(example, result));
        }
    }
    false_positives.sort_by(|a, b| a.id.cmp(&b.id));
    false_negatives.sort_by(|a, b| a.id.cmp(&b.id));
    ScoreReport { counts, metrics: compute_metrics(&counts), false_positives, false_negatives, error: None }
}

/// Deterministic pseudo-random subset of at most `k` items, keyed by seed,
/// a salt and each item's id.
pub fn seeded_sample<'a, T>(items: &'a [T], id: impl Fn(&T) -> &str, seed: u64, salt: &str, k: usize) -> Vec<&'a T> {
    let mut keyed: Vec<([u8; 32], &T)> = items
        .iter()
        .map(|item| {
            let mut h = Sha256::new();
            h.update(seed.to_le_bytes());
            h.update(salt.as_bytes());
            h.update([0]);
            h.update(id(item).as_bytes());
            (h.finalize().into(), item)
        })
        .collect();
    keyed.sort_by_key(|a| a.0);
    keyed.into_iter().take(k).map(|(_, item)| item).collect()
}

struct Best {
    attempt: u32,
    program: ClassifierProgram,
    report: ScoreReport,
}

/// Runs the prompt / score / feedback loop for one class.
///
/// Never fails: client errors, missing code blocks and invalid programs are
/// recorded as attempts scoring zero. The returned program is the attempt with
/// the highest training F1 (earliest on ties).
pub fn synthesize_class(
    class: &ClassDataset,
    train_positives: &[&StructureRecord],
    train_negatives: &[&StructureRecord],
    config: &LeiaConfig,
    client: &dyn LlmClient,
    experiment: &str,
) -> SynthesisOutcome {
    let shown = seeded_sample(train_positives, |r| &r.id, config.seed, &class.class_id, config.positive_sample_size);
    let shown: Vec<&StructureRecord> = shown.into_iter().copied().collect();
    let initial = build_initial_prompt(class, &shown, fixtures::ALKANE, config);

    let negatives: Vec<&StructureRecord> = match config.negative_sample_cap {
        Some(cap) if cap < train_negatives.len() => {
            let salt = format!("{}/negatives", class.class_id);
            let mut picked: Vec<&StructureRecord> =
                seeded_sample(train_negatives, |r| &r.id, config.seed, &salt, cap).into_iter().copied().collect();
            picked.sort_by(|a, b| a.id.cmp(&b.id));
            picked
        }
        _ => train_negatives.to_vec(),
    };
    let positives = PreparedExample::prepare(train_positives);
    let negatives = PreparedExample::prepare(&negatives);

    let mut history: Vec<AttemptRecord> = Vec::new();
    let mut best: Option<Best> = None;
    let mut feedback: Option<FeedbackContext> = None;
    let mut attempts_used = 0;

    for attempt in 1..=config.max_attempts {
        attempts_used = attempt;
        let mut user = initial.clone();
        if let Some(previous) = &feedback {
            user.push_str(&build_feedback_prompt(previous, config));
        }
        let request = LlmRequest {
            class_id: class.class_id.clone(),
            attempt,
            model: config.model_name.clone(),
            system: SYSTEM_PROMPT.to_string(),
            user,
            params: config.params.clone(),
        };
        let (program_text, reasoning, parsed) = match complete(client, &request) {
            Err(e) => (None, String::new(), Err(format!("model request failed: {e}"))),
            Ok(exchange) => match exchange.extracted_program {
                None => (None, exchange.reasoning_prose, Err("the reply contained no fenced code block".to_string())),
                Some(code) => {
                    let parsed = check_program_text(&code, &config.limits)
                        .map_err(|diags| diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"));
                    (Some(code), exchange.reasoning_prose, parsed)
                }
            },
        };
        let parsed = parsed.map(|mut p| {
            p.class_id = class.class_id.clone();
            p.class_name = class.name.clone();
            p
        });
        let report = score_program(parsed.as_ref().map_err(String::as_str), &positives, &negatives);
        let f1 = report.metrics.f1;
        log::info!(
            "{} attempt {attempt}: F1 {f1:.3}{}",
            class.class_id,
            report.error.as_deref().map(|e| format!(" ({})", e.lines().next().unwrap_or(""))).unwrap_or_default()
        );
        history.push(AttemptRecord {
            attempt_number: attempt,
            program_text: program_text.clone().unwrap_or_default(),
            llm_reasoning: reasoning,
            train_f1: f1,
            error: report.error.clone(),
        });
        feedback = Some(FeedbackContext {
            attempt,
            program_text,
            false_positives: report.false_positives.clone(),
            false_negatives: report.false_negatives.clone(),
            error: report.error.clone(),
            f1,
        });
        if let Ok(program) = parsed {
            if best.as_ref().is_none_or(|b| f1 > b.report.metrics.f1) {
                best = Some(Best { attempt, program, report });
            }
        }
        if f1 >= config.f1_threshold {
            break;
        }
    }

    let best = best.unwrap_or_else(|| {
        let program = ClassifierProgram::constant(&class.class_id, &class.name, Action::Reject, FALLBACK_REASON);
        let report = score_program(Ok(&program), &positives, &negatives);
        Best { attempt: 0, program, report }
    });
    let mut program = best.program;
    program.attempt_history = history;
    let f1 = best.report.metrics.f1;
    SynthesisOutcome {
        stats: ClassStats {
            class_id: class.class_id.clone(),
            class_name: class.name.clone(),
            experiment: experiment.to_string(),
            train_counts: best.report.counts,
            train_metrics: best.report.metrics,
            attempts_used,
            reached_threshold: f1 >= config.f1_threshold,
            best_attempt: best.attempt,
            positives_scored: positives.len(),
            negatives_scored: negatives.len(),
            negative_sample_cap: config.negative_sample_cap,
        },
        program,
    }
}
