use super::{ClassificationResult, ClassifierProgram, Expr, LinearExpr, Metric, Predicate};
use crate::elements::HYDROGEN;
use crate::molgraph::{parse_smiles, Molecule};

/// Reason reported when the input structure cannot be parsed.
pub const INVALID_SMILES_REASON: &str = "Invalid SMILES string";

fn metric_value(metric: Metric, mol: &Molecule) -> i64 {
    match metric {
        Metric::Atoms(z) => i64::from(mol.atom_count(z)),
        Metric::HTotal => i64::from(mol.atom_count(HYDROGEN)),
        Metric::Rings => mol.ring_count() as i64,
        Metric::Charge => i64::from(mol.net_formal_charge()),
        Metric::Bonds(order) => mol.bond_count(order) as i64,
        Metric::TotalAtoms => mol.atoms().len() as i64,
    }
}

fn linear_value(expr: &LinearExpr, mol: &Molecule) -> i64 {
    expr.terms
        .iter()
        .map(|t| t.coefficient.saturating_mul(t.metric.map_or(1, |m| metric_value(m, mol))))
        .fold(0i64, i64::saturating_add)
}

impl Predicate {
    pub fn holds(&self, mol: &Molecule) -> bool {
        match self {
            Predicate::Match(pattern) => pattern.has_match(mol),
            Predicate::Count { pattern, comparison, value } => {
                comparison.holds(pattern.count_matches(mol) as i64, *value)
            }
            Predicate::Linear { lhs, comparison, rhs } => {
                comparison.holds(linear_value(lhs, mol), linear_value(rhs, mol))
            }
            // A structure whose mass is undefined (unknown isotope) is outside
            // every interval.
            Predicate::MolWeight { low, high } => mol.exact_molecular_weight().is_ok_and(|w| *low <= w && w <= *high),
            Predicate::ElementsSubsetOf(allowed) => mol.element_set().is_subset(allowed),
            Predicate::SingleFragment => mol.component_count() == 1,
        }
    }
}

impl Expr {
    pub fn holds(&self, mol: &Molecule) -> bool {
        match self {
            Expr::And(parts) => parts.iter().all(|p| p.holds(mol)),
            Expr::Or(parts) => parts.iter().any(|p| p.holds(mol)),
            Expr::Not(inner) => !inner.holds(mol),
            Expr::Leaf(predicate) => predicate.holds(mol),
        }
    }
}

/// Runs the rules in order; the first rule whose condition holds decides.
pub fn evaluate(program: &ClassifierProgram, mol: &Molecule) -> ClassificationResult {
    for (index, rule) in program.rules.iter().enumerate() {
        if rule.condition.holds(mol) {
            return ClassificationResult {
                membership: rule.action.membership(),
                reason: rule.reason.clone(),
                fired_rule: Some(index),
            };
        }
    }
    ClassificationResult {
        membership: program.default.action.membership(),
        reason: program.default.reason.clone(),
        fired_rule: None,
    }
}

/// Parses `smiles` and evaluates it. Unparseable input is a non-member.
pub fn evaluate_smiles(program: &ClassifierProgram, smiles: &str) -> ClassificationResult {
    match parse_smiles(smiles) {
        Ok(mol) => evaluate(program, &mol),
        Err(_) => {
            ClassificationResult { membership: false, reason: INVALID_SMILES_REASON.to_string(), fired_rule: None }
        }
    }
}

impl ClassifierProgram {
    pub fn classify(&self, mol: &Molecule) -> ClassificationResult {
        evaluate(self, mol)
    }
}
