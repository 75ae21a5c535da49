use std::fmt;

use serde::{Deserialize, Serialize};

use super::{parse_program, ClassifierProgram, Expr, Predicate, ProgramError};

/// Size limits enforced on synthesized programs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrammarLimits {
    pub max_rules: usize,
    /// Total SMARTS occurrences across all rules.
    pub max_smarts: usize,
    pub max_pattern_atoms: usize,
}

impl Default for GrammarLimits {
    fn default() -> Self {
        GrammarLimits { max_rules: 64, max_smarts: 32, max_pattern_atoms: 40 }
    }
}

/// A problem found while checking a program, positioned when the source text
/// is known.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramDiagnostic {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ProgramDiagnostic {
    fn unpositioned(message: String) -> Self {
        ProgramDiagnostic { line: None, column: None, message }
    }
}

impl fmt::Display for ProgramDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

impl From<ProgramError> for ProgramDiagnostic {
    fn from(err: ProgramError) -> Self {
        match &err {
            ProgramError::Syntax { line, column, message } => {
                ProgramDiagnostic { line: Some(*line), column: Some(*column), message: message.clone() }
            }
            ProgramError::Smarts { line, column, pattern, diagnostic } => ProgramDiagnostic {
                line: Some(*line),
                column: Some(*column),
                message: format!("invalid SMARTS {pattern:?}: {diagnostic}"),
            },
            ProgramError::MissingClass | ProgramError::MissingDefault => {
                ProgramDiagnostic::unpositioned(err.to_string())
            }
        }
    }
}

fn check_expr(expr: &Expr, rule: usize, out: &mut Vec<ProgramDiagnostic>) {
    match expr {
        Expr::And(parts) | Expr::Or(parts) => {
            if parts.is_empty() {
                out.push(ProgramDiagnostic::unpositioned(format!("rule {}: empty AND/OR", rule + 1)));
            }
            parts.iter().for_each(|p| check_expr(p, rule, out));
        }
        Expr::Not(inner) => check_expr(inner, rule, out),
        Expr::Leaf(Predicate::MolWeight { low, high }) => {
            if !(low.is_finite() && high.is_finite() && low <= high) {
                out.push(ProgramDiagnostic::unpositioned(format!(
                    "rule {}: MOLWT interval [{low}, {high}] is empty or not finite",
                    rule + 1
                )));
            }
        }
        Expr::Leaf(_) => {}
    }
}

/// Checks structural limits and well-formedness of a parsed program.
pub fn validate_program(program: &ClassifierProgram, limits: &GrammarLimits) -> Result<(), Vec<ProgramDiagnostic>> {
    let mut out = Vec::new();
    if program.class_id.is_empty()
        || program.class_id.contains(char::is_whitespace)
        || program.class_id.starts_with('"')
    {
        out.push(ProgramDiagnostic::unpositioned(format!("invalid class identifier {:?}", program.class_id)));
    }
    if program.rules.len() > limits.max_rules {
        out.push(ProgramDiagnostic::unpositioned(format!(
            "{} rules exceed the limit of {}",
            program.rules.len(),
            limits.max_rules
        )));
    }
    let patterns = program.patterns();
    if patterns.len() > limits.max_smarts {
        out.push(ProgramDiagnostic::unpositioned(format!(
            "{} SMARTS patterns exceed the limit of {}",
            patterns.len(),
            limits.max_smarts
        )));
    }
    for pattern in &patterns {
        if pattern.atom_count() > limits.max_pattern_atoms {
            out.push(ProgramDiagnostic::unpositioned(format!(
                "SMARTS {:?} has {} atoms, above the limit of {}",
                pattern.source(),
                pattern.atom_count(),
                limits.max_pattern_atoms
            )));
        }
    }
    for (i, rule) in program.rules.iter().enumerate() {
        check_expr(&rule.condition, i, &mut out);
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Parses and validates program text, reporting every problem as a diagnostic.
pub fn check_program_text(text: &str, limits: &GrammarLimits) -> Result<ClassifierProgram, Vec<ProgramDiagnostic>> {
    let program = parse_program(text).map_err(|e| vec![ProgramDiagnostic::from(e)])?;
    validate_program(&program, limits)?;
    Ok(program)
}
