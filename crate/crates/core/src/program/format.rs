use std::fmt::{self, Display, Formatter, Write};

use super::{ClassifierProgram, Expr, LinearExpr, Metric, Predicate, Term};
use crate::elements;

fn quoted(f: &mut Formatter<'_>, text: &str) -> fmt::Result {
    f.write_char('"')?;
    for ch in text.chars() {
        match ch {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            other => f.write_char(other)?,
        }
    }
    f.write_char('"')
}

impl Display for Metric {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Atoms(z) => write!(f, "ATOMS({})", elements::symbol(*z)),
            Metric::HTotal => f.write_str("HTOTAL"),
            Metric::Rings => f.write_str("RINGS"),
            Metric::Charge => f.write_str("CHARGE"),
            Metric::Bonds(order) => write!(f, "BONDS({})", order.keyword()),
            Metric::TotalAtoms => f.write_str("TOTALATOMS"),
        }
    }
}

fn write_term(f: &mut Formatter<'_>, term: &Term, magnitude: i64) -> fmt::Result {
    match term.metric {
        None => write!(f, "{magnitude}"),
        Some(metric) if magnitude == 1 => write!(f, "{metric}"),
        Some(metric) => write!(f, "{magnitude}*{metric}"),
    }
}

impl Display for LinearExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for (i, term) in self.terms.iter().enumerate() {
            if i == 0 {
                match (term.coefficient < 0, term.metric) {
                    (true, Some(metric)) => write!(f, "{}*{metric}", term.coefficient)?,
                    (true, None) => write!(f, "{}", term.coefficient)?,
                    (false, _) => write_term(f, term, term.coefficient)?,
                }
            } else {
                f.write_str(if term.coefficient < 0 { " - " } else { " + " })?;
                write_term(f, term, term.coefficient.abs())?;
            }
        }
        Ok(())
    }
}

impl Display for Predicate {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Match(pattern) => {
                f.write_str("MATCH(")?;
                quoted(f, pattern.source())?;
                f.write_str(")")
            }
            Predicate::Count { pattern, comparison, value } => {
                f.write_str("COUNT(")?;
                quoted(f, pattern.source())?;
                write!(f, ") {} {value}", comparison.symbol())
            }
            Predicate::Linear { lhs, comparison, rhs } => write!(f, "{lhs} {} {rhs}", comparison.symbol()),
            Predicate::MolWeight { low, high } => write!(f, "MOLWT IN [{low}, {high}]"),
            Predicate::ElementsSubsetOf(set) => {
                let symbols: Vec<&str> = set.iter().map(|&z| elements::symbol(z)).collect();
                write!(f, "ELEMENTS SUBSET_OF {{{}}}", symbols.join(", "))
            }
            Predicate::SingleFragment => f.write_str("SINGLE_FRAGMENT"),
        }
    }
}

/// Binding context of a subexpression: 0 under OR or at top level, 1 under
/// AND, 2 under NOT.
fn write_expr(f: &mut Formatter<'_>, expr: &Expr, context: u8) -> fmt::Result {
    let (parts, joiner, own) = match expr {
        Expr::Leaf(predicate) => return write!(f, "{predicate}"),
        Expr::Not(inner) => {
            f.write_str("NOT ")?;
            return write_expr(f, inner, 2);
        }
        Expr::And(parts) => (parts, " AND ", 1),
        Expr::Or(parts) => (parts, " OR ", 0),
    };
    let parenthesize = context > own;
    if parenthesize {
        f.write_str("(")?;
    }
    for (i, part) in parts.iter().enumerate() {
        if i > 0 {
            f.write_str(joiner)?;
        }
        write_expr(f, part, own + 1)?;
    }
    if parenthesize {
        f.write_str(")")?;
    }
    Ok(())
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_expr(f, self, 0)
    }
}

impl Display for ClassifierProgram {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "CLASS {} ", self.class_id)?;
        quoted(f, &self.class_name)?;
        f.write_char('\n')?;
        if let Some(definition) = &self.definition {
            f.write_str("DEFINITION ")?;
            quoted(f, definition)?;
            f.write_char('\n')?;
        }
        for rule in &self.rules {
            write!(f, "RULE {} IF {} REASON ", rule.action.keyword(), rule.condition)?;
            quoted(f, &rule.reason)?;
            f.write_char('\n')?;
        }
        write!(f, "DEFAULT {} REASON ", self.default.action.keyword())?;
        quoted(f, &self.default.reason)?;
        f.write_char('\n')
    }
}
