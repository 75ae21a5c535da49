use std::fmt::Write;

use super::LeiaConfig;
use crate::benchmark::{ClassDataset, StructureRecord};

pub const SYSTEM_PROMPT: &str = "You are an expert cheminformatician who writes precise, well-documented \
chemical classifier programs in a small rule language.";

/// Reference for the rule language, included in every prompt.
pub const GRAMMAR_SUMMARY: &str = r#"A classifier program is plain text, one statement per line; `#` starts a comment.

  CLASS <id> "<name>"
  DEFINITION "<text>"                                  (optional)
  RULE <ACCEPT|REJECT> IF <condition> REASON "<text>"  (any number, tried in order)
  DEFAULT <ACCEPT|REJECT> REASON "<text>"              (required, last)

The first rule whose condition holds decides membership and its REASON is the
explanation; if none holds, DEFAULT applies.

Conditions combine with NOT, AND, OR (in that precedence) and parentheses:
  MATCH("<smarts>")                    substructure present
  COUNT("<smarts>") <cmp> <int>        number of distinct matches
  <linear> <cmp> <linear>              integer arithmetic over metrics
  MOLWT IN [<low>, <high>]             monoisotopic mass, inclusive
  ELEMENTS SUBSET_OF {C, H, O}         no other elements present
  SINGLE_FRAGMENT                      one connected component
<cmp> is one of < <= = != >= >. A <linear> term is an integer, a metric, or
<int>*<metric>, joined by + and -. Metrics: ATOMS(<symbol>) (hydrogen counts
implicit H), HTOTAL, RINGS, CHARGE, TOTALATOMS, BONDS(SINGLE|DOUBLE|TRIPLE|AROMATIC).

SMARTS support: element symbols (lowercase = aromatic), *, bracket atoms with
comma alternatives [C,N], charges [N+], H counts [OH1], connectivity [CX3],
bonds - = # : ~, branches and ring closures. Recursive SMARTS, ; and & are not
supported. Limits: 64 rules, 32 SMARTS, 40 atoms per SMARTS."#;

const OUTPUT_INSTRUCTIONS: &str = "First reason step by step about the structural features that define the class \
(chain of thought). Then give the complete program in a single fenced code block. Document each rule with a \
clear REASON. Only the last fenced code block in your reply is used.";

const FORCE_INSTRUCTION: &str = "Note: the example classifications come from a curated database and may contain \
mistakes. You may override examples you are confident are misclassified rather than contorting the program to fit \
them; explain any such decision in your reasoning.";

/// Builds the first prompt for a class.
pub fn build_initial_prompt(
    class: &ClassDataset,
    positives: &[&StructureRecord],
    exemplar: &str,
    config: &LeiaConfig,
) -> String {
    let mut p = String::new();
    let _ = writeln!(
        p,
        "Write a classifier program that decides whether a molecule, given as a SMILES string, belongs to the \
         chemical class {:?} ({}).",
        class.name, class.class_id
    );
    p.push_str(OUTPUT_INSTRUCTIONS);
    p.push_str("\n\n## Rule language\n\n");
    p.push_str(GRAMMAR_SUMMARY);
    p.push_str("\n\n## Target class\n\n");
    let _ = writeln!(p, "Name: {}", class.name);
    let _ = writeln!(p, "Identifier: {}", class.class_id);
    if config.include_definition {
        if let Some(definition) = &class.definition {
            let _ = writeln!(p, "Definition: {definition}");
        }
    }
    p.push_str("\n## Examples of class members (name, SMILES)\n\n");
    for record in positives.iter().take(config.positive_sample_size) {
        let _ = writeln!(p, "- {}: {}", record.name, record.smiles);
    }
    p.push_str("\n## Example program for a different class\n\n```\n");
    p.push_str(exemplar.trim_end());
    p.push_str("\n```\n");
    if config.use_the_force {
        p.push('\n');
        p.push_str(FORCE_INSTRUCTION);
        p.push('\n');
    }
    p
}

/// A training example the previous program got wrong.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Misclassification {
    pub id: String,
    pub name: String,
    pub smiles: String,
    /// Explanation the program gave.
    pub reason: String,
}

/// What the next attempt is told about the previous one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeedbackContext {
    pub attempt: u32,
    pub program_text: Option<String>,
    pub false_positives: Vec<Misclassification>,
    pub false_negatives: Vec<Misclassification>,
    pub error: Option<String>,
    pub f1: f64,
}

fn list_misclassified(p: &mut String, title: &str, items: &[Misclassification], limit: usize) {
    let _ = writeln!(p, "\n### {title} ({} total, showing up to {limit})\n", items.len());
    if items.is_empty() {
        p.push_str("None.\n");
    }
    for m in items.iter().take(limit) {
        let _ = writeln!(p, "- {}: {} (program said: {})", m.name, m.smiles, m.reason);
    }
}

/// Section appended to the initial prompt after a failed attempt.
pub fn build_feedback_prompt(previous: &FeedbackContext, config: &LeiaConfig) -> String {
    let mut p = String::new();
    let _ = writeln!(p, "\n## Previous attempt {}\n", previous.attempt);
    match &previous.program_text {
        Some(text) => {
            p.push_str("The previous program was:\n\n```\n");
            p.push_str(text.trim_end());
            p.push_str("\n```\n");
        }
        None => p.push_str("The previous reply did not contain a program.\n"),
    }
    if let Some(error) = &previous.error {
        let _ = writeln!(p, "\nIt failed with this error, so its F1 score counts as 0:\n\n{error}");
    } else {
        let _ = writeln!(
            p,
            "\nIt scored F1 = {:.3} on the training examples, below the target of {}.",
            previous.f1, config.f1_threshold
        );
        if previous.false_positives.is_empty() && previous.false_negatives.is_empty() {
            p.push_str("No individual examples were misclassified.\n");
        } else {
            list_misclassified(
                &mut p,
                "False positives: accepted but not members",
                &previous.false_positives,
                config.feedback_sample_size,
            );
            list_misclassified(
                &mut p,
                "False negatives: members that were rejected",
                &previous.false_negatives,
                config.feedback_sample_size,
            );
        }
    }
    p.push_str("\nAdapt the program to fix these problems. Reason first, then give the full revised program in one fenced code block.\n");
    p
}
