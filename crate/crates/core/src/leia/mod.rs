//! Iterative program synthesis: prompt a language model for a classifier
//! program, score it on training examples, feed failures back and repeat
//! until the F1 threshold or the attempt cap is reached.

mod client;
mod prompt;
mod run;
mod synth;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::program::GrammarLimits;

pub use client::{
    complete, extract_program, HttpClient, HttpClientConfig, LlmClient, LlmError, LlmExchange, LlmRequest,
    ScriptedClient, DEFAULT_API_KEY_ENV,
};
pub use prompt::{
    build_feedback_prompt, build_initial_prompt, FeedbackContext, Misclassification, GRAMMAR_SUMMARY, SYSTEM_PROMPT,
};
pub use run::{synthesize_suite, SuiteRun};
pub use synth::{score_program, seeded_sample, synthesize_class, PreparedExample, ScoreReport, FALLBACK_REASON};

/// Outcome of synthesizing one class: the kept program with its attempt
/// history, plus training statistics.
pub type SynthesisOutcome = crate::suite::SuiteProgram;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeiaConfig {
    /// Stop once a program reaches this training F1; in (0, 1].
    pub f1_threshold: f64,
    pub max_attempts: u32,
    pub model_name: String,
    /// Extra sampling parameters merged into every request body.
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
    pub include_definition: bool,
    /// Tell the model it may disregard examples it believes are mislabeled.
    pub use_the_force: bool,
    pub positive_sample_size: usize,
    /// Maximum false positives, and separately false negatives, shown per
    /// feedback round.
    pub feedback_sample_size: usize,
    pub negative_sample_cap: Option<usize>,
    pub seed: u64,
    #[serde(default)]
    pub limits: GrammarLimits,
}

impl Default for LeiaConfig {
    fn default() -> Self {
        LeiaConfig {
            f1_threshold: 0.8,
            max_attempts: 4,
            model_name: "gpt-4o".to_string(),
            params: BTreeMap::new(),
            include_definition: true,
            use_the_force: false,
            positive_sample_size: 50,
            feedback_sample_size: 25,
            negative_sample_cap: None,
            seed: 42,
            limits: GrammarLimits::default(),
        }
    }
}

impl LeiaConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.f1_threshold > 0.0 && self.f1_threshold <= 1.0) {
            return Err(format!("f1_threshold must be in (0, 1], got {}", self.f1_threshold));
        }
        if self.max_attempts < 1 {
            return Err("max_attempts must be at least 1".to_string());
        }
        if self.positive_sample_size < 1 || self.feedback_sample_size < 1 {
            return Err("sample sizes must be positive".to_string());
        }
        if self.negative_sample_cap == Some(0) {
            return Err("negative_sample_cap must be positive when set".to_string());
        }
        Ok(())
    }

    /// Applies a named experiment preset on top of this configuration.
    pub fn with_preset(mut self, preset: &ExperimentPreset) -> Self {
        self.model_name = preset.model.to_string();
        self.use_the_force = preset.use_the_force;
        self.max_attempts = preset.max_attempts;
        self.f1_threshold = preset.f1_threshold;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentPreset {
    pub name: &'static str,
    pub model: &'static str,
    pub use_the_force: bool,
    pub max_attempts: u32,
    pub f1_threshold: f64,
}

const fn preset(name: &'static str, model: &'static str, force: bool, attempts: u32, f1: f64) -> ExperimentPreset {
    ExperimentPreset { name, model, use_the_force: force, max_attempts: attempts, f1_threshold: f1 }
}

/// The standard experiment configurations.
pub const PRESETS: &[ExperimentPreset] = &[
    preset("claude-sonnet", "claude-sonnet", false, 4, 0.8),
    preset("gpt-4o", "gpt-4o", false, 4, 0.8),
    preset("o1", "o1", false, 4, 0.8),
    preset("o3-mini", "o3-mini", false, 4, 0.8),
    preset("deepseek-r1", "deepseek-r1", false, 4, 0.8),
    preset("gemini-2.0-flash-exp", "gemini-2.0-flash-exp", false, 4, 0.8),
    preset("claude-sonnet-F", "claude-sonnet", true, 4, 0.8),
    preset("gpt-4o-iter6", "gpt-4o", false, 6, 0.9),
    preset("o3-mini-iter6", "o3-mini", false, 6, 0.9),
];

pub fn find_preset(name: &str) -> Option<&'static ExperimentPreset> {
    PRESETS.iter().find(|p| p.name == name)
}
