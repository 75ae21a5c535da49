//! Classifier programs: an ordered list of ACCEPT/REJECT rules over molecular
//! predicates, ending in a default verdict.
//!
//! Programs are plain text (see [`parse_program`]) and are interpreted
//! in-process. The language has no loops or user functions, so evaluation
//! always terminates with exactly one verdict.
//!
//! ```text
//! CLASS CHEBI:18310 "alkane"
//! RULE REJECT IF RINGS > 0 REASON "Contains rings, not acyclic"
//! DEFAULT ACCEPT REASON "Molecule matches the definition of an alkane"
//! ```

mod eval;
pub mod fixtures;
mod format;
mod parse;
mod validate;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::molgraph::BondOrder;
use crate::smarts::SmartsPattern;

pub use eval::{evaluate, evaluate_smiles, INVALID_SMILES_REASON};
pub use parse::{parse_program, ProgramError};
pub use validate::{check_program_text, validate_program, GrammarLimits, ProgramDiagnostic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Accept,
    Reject,
}

impl Action {
    pub fn membership(self) -> bool {
        matches!(self, Action::Accept)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Action::Accept => "ACCEPT",
            Action::Reject => "REJECT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparison {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl Comparison {
    pub fn holds<T: PartialOrd>(self, lhs: T, rhs: T) -> bool {
        match self {
            Comparison::Lt => lhs < rhs,
            Comparison::Le => lhs <= rhs,
            Comparison::Eq => lhs == rhs,
            Comparison::Ne => lhs != rhs,
            Comparison::Ge => lhs >= rhs,
            Comparison::Gt => lhs > rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Lt => "<",
            Comparison::Le => "<=",
            Comparison::Eq => "=",
            Comparison::Ne => "!=",
            Comparison::Ge => ">=",
            Comparison::Gt => ">",
        }
    }
}

/// Integer-valued molecular quantities usable in linear comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    /// Atoms of one element; hydrogen includes implicit hydrogens.
    Atoms(u8),
    /// All hydrogens, graph and implicit.
    HTotal,
    Rings,
    Charge,
    Bonds(BondOrder),
    /// Graph atoms (implicit hydrogens excluded).
    TotalAtoms,
}

/// `coefficient * metric`, or a bare constant when `metric` is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Term {
    pub coefficient: i64,
    pub metric: Option<Metric>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearExpr {
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Match(SmartsPattern),
    Count {
        pattern: SmartsPattern,
        comparison: Comparison,
        value: i64,
    },
    Linear {
        lhs: LinearExpr,
        comparison: Comparison,
        rhs: LinearExpr,
    },
    /// Closed interval in daltons.
    MolWeight {
        low: f64,
        high: f64,
    },
    ElementsSubsetOf(BTreeSet<u8>),
    SingleFragment,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Not(Box<Expr>),
    Leaf(Predicate),
}

impl Expr {
    /// Conjunction, flattening nested conjunctions.
    pub fn all(parts: Vec<Expr>) -> Expr {
        Self::flatten(parts, true)
    }

    /// Disjunction, flattening nested disjunctions.
    pub fn any(parts: Vec<Expr>) -> Expr {
        Self::flatten(parts, false)
    }

    fn flatten(parts: Vec<Expr>, conjunction: bool) -> Expr {
        let mut flat = Vec::with_capacity(parts.len());
        for part in parts {
            match (part, conjunction) {
                (Expr::And(inner), true) | (Expr::Or(inner), false) => flat.extend(inner),
                (other, _) => flat.push(other),
            }
        }
        if flat.len() == 1 {
            return flat.pop().expect("one element");
        }
        if conjunction {
            Expr::And(flat)
        } else {
            Expr::Or(flat)
        }
    }

    pub fn negate(inner: Expr) -> Expr {
        Expr::Not(Box::new(inner))
    }

    /// Every SMARTS pattern referenced by this expression, in textual order.
    pub fn patterns(&self) -> Vec<&SmartsPattern> {
        let mut out = Vec::new();
        self.collect_patterns(&mut out);
        out
    }

    fn collect_patterns<'a>(&'a self, out: &mut Vec<&'a SmartsPattern>) {
        match self {
            Expr::And(parts) | Expr::Or(parts) => parts.iter().for_each(|p| p.collect_patterns(out)),
            Expr::Not(inner) => inner.collect_patterns(out),
            Expr::Leaf(Predicate::Match(p)) | Expr::Leaf(Predicate::Count { pattern: p, .. }) => out.push(p),
            Expr::Leaf(_) => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub action: Action,
    pub condition: Expr,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefaultVerdict {
    pub action: Action,
    pub reason: String,
}

/// One synthesis attempt, kept alongside the program it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub attempt_number: u32,
    pub program_text: String,
    pub llm_reasoning: String,
    pub train_f1: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierProgram {
    pub class_id: String,
    pub class_name: String,
    pub definition: Option<String>,
    pub rules: Vec<Rule>,
    pub default: DefaultVerdict,
    pub attempt_history: Vec<AttemptRecord>,
}

impl ClassifierProgram {
    /// A program with no rules that always returns `default`.
    pub fn constant(class_id: &str, class_name: &str, action: Action, reason: &str) -> Self {
        ClassifierProgram {
            class_id: class_id.to_string(),
            class_name: class_name.to_string(),
            definition: None,
            rules: Vec::new(),
            default: DefaultVerdict { action, reason: reason.to_string() },
            attempt_history: Vec::new(),
        }
    }

    pub fn patterns(&self) -> Vec<&SmartsPattern> {
        self.rules.iter().flat_map(|r| r.condition.patterns()).collect()
    }

    /// The program text, without attempt history.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    /// Equality of everything the text form carries (attempt history ignored).
    pub fn same_program(&self, other: &ClassifierProgram) -> bool {
        self.class_id == other.class_id
            && self.class_name == other.class_name
            && self.definition == other.definition
            && self.rules == other.rules
            && self.default == other.default
    }
}

/// Serializes a program to its text form.
pub fn serialize_program(program: &ClassifierProgram) -> String {
    program.to_string()
}

/// `(m, e)`: membership plus the reason of the rule that decided it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub membership: bool,
    pub reason: String,
    /// Index of the fired rule; `None` when the default verdict applied.
    pub fired_rule: Option<usize>,
}
