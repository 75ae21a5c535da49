use std::collections::BTreeSet;

use thiserror::Error;

use super::{Action, ClassifierProgram, Comparison, DefaultVerdict, Expr, LinearExpr, Metric, Predicate, Rule, Term};
use crate::elements;
use crate::molgraph::{BondOrder, ParseDiagnostic};
use crate::smarts::{parse_smarts, SmartsPattern};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProgramError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}, column {column}: invalid SMARTS {pattern:?}: {diagnostic}")]
    Smarts { line: usize, column: usize, pattern: String, diagnostic: ParseDiagnostic },
    #[error("missing CLASS header")]
    MissingClass,
    #[error("missing DEFAULT verdict")]
    MissingDefault,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Int(i64),
    Real(f64),
    Str(String),
    Punct(&'static str),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    column: usize,
}

const PUNCT: &[&str] =
    &["<=", ">=", "==", "!=", "≤", "≥", "≠", "<", ">", "=", "(", ")", "[", "]", "{", "}", ",", "*", "+", "-"];

/// Removes a trailing `#` comment that is not inside a string literal.
fn strip_comment(line: &str) -> &str {
    let mut in_string = false;
    let mut escaped = false;
    for (i, ch) in line.char_indices() {
        if in_string {
            if escaped {
                escaped = false;
            } else if ch == '\\' {
                escaped = true;
            } else if ch == '"' {
                in_string = false;
            }
        } else if ch == '"' {
            in_string = true;
        } else if ch == '#' {
            return &line[..i];
        }
    }
    line
}

fn tokenize(text: &str, line: usize, base_column: usize) -> Result<Vec<Token>, ProgramError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let column_of = |idx: usize| base_column + text[..idx].chars().count();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (start, ch) = chars[i];
        if ch.is_whitespace() {
            i += 1;
            continue;
        }
        let column = column_of(start);
        if ch == '"' {
            let mut value = String::new();
            i += 1;
            loop {
                let Some(&(_, c)) = chars.get(i) else {
                    return Err(syntax(line, column, "unterminated string"));
                };
                i += 1;
                match c {
                    '"' => break,
                    '\\' => {
                        let Some(&(_, next)) = chars.get(i) else {
                            return Err(syntax(line, column, "unterminated string"));
                        };
                        i += 1;
                        value.push(match next {
                            'n' => '\n',
                            't' => '\t',
                            other => other,
                        });
                    }
                    other => value.push(other),
                }
            }
            tokens.push(Token { tok: Tok::Str(value), column });
        } else if ch.is_ascii_digit() || (ch == '.' && chars.get(i + 1).is_some_and(|c| c.1.is_ascii_digit())) {
            let mut end = i;
            while end < chars.len() && (chars[end].1.is_ascii_digit() || chars[end].1 == '.') {
                end += 1;
            }
            let stop = chars.get(end).map_or(text.len(), |c| c.0);
            let literal = &text[start..stop];
            let tok = if literal.contains('.') {
                literal
                    .parse::<f64>()
                    .map(Tok::Real)
                    .map_err(|_| syntax(line, column, &format!("malformed number {literal:?}")))?
            } else {
                literal
                    .parse::<i64>()
                    .map(Tok::Int)
                    .map_err(|_| syntax(line, column, &format!("integer {literal:?} out of range")))?
            };
            tokens.push(Token { tok, column });
            i = end;
        } else if ch.is_alphabetic() || ch == '_' {
            let mut end = i;
            while end < chars.len() && (chars[end].1.is_alphanumeric() || chars[end].1 == '_') {
                end += 1;
            }
            let stop = chars.get(end).map_or(text.len(), |c| c.0);
            tokens.push(Token { tok: Tok::Word(text[start..stop].to_string()), column });
            i = end;
        } else if let Some(p) = PUNCT.iter().find(|p| text[start..].starts_with(**p)) {
            tokens.push(Token { tok: Tok::Punct(p), column });
            i += p.chars().count();
        } else {
            return Err(syntax(line, column, &format!("unexpected character {ch:?}")));
        }
    }
    Ok(tokens)
}

fn syntax(line: usize, column: usize, message: &str) -> ProgramError {
    ProgramError::Syntax { line, column, message: message.to_string() }
}

struct LineParser {
    tokens: Vec<Token>,
    pos: usize,
    line: usize,
    end_column: usize,
}

impl LineParser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn column(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end_column, |t| t.column)
    }

    fn error(&self, message: &str) -> ProgramError {
        syntax(self.line, self.column(), message)
    }

    fn describe_current(&self) -> String {
        match self.peek() {
            None => "end of line".to_string(),
            Some(Tok::Word(w)) => format!("{w:?}"),
            Some(Tok::Int(n)) => n.to_string(),
            Some(Tok::Real(x)) => x.to_string(),
            Some(Tok::Str(s)) => format!("string {s:?}"),
            Some(Tok::Punct(p)) => format!("{p:?}"),
        }
    }

    fn next(&mut self) -> Option<Tok> {
        let tok = self.tokens.get(self.pos).map(|t| t.tok.clone());
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn at_word(&self, word: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w == word)
    }

    fn at_punct(&self, punct: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(p)) if *p == punct)
    }

    fn expect_word(&mut self, word: &str) -> Result<(), ProgramError> {
        if self.at_word(word) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected {word}, found {}", self.describe_current())))
        }
    }

    fn expect_punct(&mut self, punct: &str) -> Result<(), ProgramError> {
        if self.at_punct(punct) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected {punct:?}, found {}", self.describe_current())))
        }
    }

    fn expect_string(&mut self) -> Result<String, ProgramError> {
        match self.peek() {
            Some(Tok::Str(_)) => match self.next() {
                Some(Tok::Str(s)) => Ok(s),
                _ => unreachable!(),
            },
            _ => Err(self.error(&format!("expected quoted string, found {}", self.describe_current()))),
        }
    }

    fn expect_end(&self) -> Result<(), ProgramError> {
        if self.peek().is_none() {
            Ok(())
        } else {
            Err(self.error(&format!("unexpected {} at end of statement", self.describe_current())))
        }
    }

    fn action(&mut self) -> Result<Action, ProgramError> {
        let action = match self.peek() {
            Some(Tok::Word(w)) if w == "ACCEPT" => Action::Accept,
            Some(Tok::Word(w)) if w == "REJECT" => Action::Reject,
            _ => return Err(self.error(&format!("expected ACCEPT or REJECT, found {}", self.describe_current()))),
        };
        self.pos += 1;
        Ok(action)
    }

    fn comparison(&mut self) -> Result<Comparison, ProgramError> {
        let cmp = match self.peek() {
            Some(Tok::Punct(p)) => match *p {
                "<" => Comparison::Lt,
                "<=" | "≤" => Comparison::Le,
                "=" | "==" => Comparison::Eq,
                "!=" | "≠" => Comparison::Ne,
                ">=" | "≥" => Comparison::Ge,
                ">" => Comparison::Gt,
                _ => return Err(self.error(&format!("expected comparison, found {p:?}"))),
            },
            _ => return Err(self.error(&format!("expected comparison, found {}", self.describe_current()))),
        };
        self.pos += 1;
        Ok(cmp)
    }

    fn signed_int(&mut self) -> Result<i64, ProgramError> {
        let negative = if self.at_punct("-") {
            self.pos += 1;
            true
        } else {
            false
        };
        match self.peek() {
            Some(&Tok::Int(n)) => {
                self.pos += 1;
                Ok(if negative { -n } else { n })
            }
            _ => Err(self.error(&format!("expected integer, found {}", self.describe_current()))),
        }
    }

    fn real(&mut self) -> Result<f64, ProgramError> {
        let negative = if self.at_punct("-") {
            self.pos += 1;
            true
        } else {
            false
        };
        let value = match self.peek() {
            Some(&Tok::Int(n)) => n as f64,
            Some(&Tok::Real(x)) => x,
            _ => return Err(self.error(&format!("expected number, found {}", self.describe_current()))),
        };
        self.pos += 1;
        Ok(if negative { -value } else { value })
    }

    fn smarts_argument(&mut self) -> Result<SmartsPattern, ProgramError> {
        self.expect_punct("(")?;
        let column = self.column();
        let text = self.expect_string()?;
        let pattern = parse_smarts(&text).map_err(|diagnostic| ProgramError::Smarts {
            line: self.line,
            column,
            pattern: text.clone(),
            diagnostic,
        })?;
        self.expect_punct(")")?;
        Ok(pattern)
    }

    fn element_symbol(&mut self) -> Result<u8, ProgramError> {
        match self.peek() {
            Some(Tok::Word(w)) => match elements::by_symbol(w) {
                Some(e) => {
                    self.pos += 1;
                    Ok(e.atomic_number)
                }
                None => Err(self.error(&format!("unknown element symbol {w:?}"))),
            },
            _ => Err(self.error(&format!("expected element symbol, found {}", self.describe_current()))),
        }
    }

    fn expr(&mut self) -> Result<Expr, ProgramError> {
        let mut parts = vec![self.conjunction()?];
        while self.at_word("OR") {
            self.pos += 1;
            parts.push(self.conjunction()?);
        }
        Ok(Expr::any(parts))
    }

    fn conjunction(&mut self) -> Result<Expr, ProgramError> {
        let mut parts = vec![self.unary()?];
        while self.at_word("AND") {
            self.pos += 1;
            parts.push(self.unary()?);
        }
        Ok(Expr::all(parts))
    }

    fn unary(&mut self) -> Result<Expr, ProgramError> {
        if self.at_word("NOT") {
            self.pos += 1;
            return Ok(Expr::negate(self.unary()?));
        }
        if self.at_punct("(") {
            self.pos += 1;
            let inner = self.expr()?;
            self.expect_punct(")")?;
            return Ok(inner);
        }
        self.predicate().map(Expr::Leaf)
    }

    fn predicate(&mut self) -> Result<Predicate, ProgramError> {
        if self.at_word("MATCH") {
            self.pos += 1;
            return Ok(Predicate::Match(self.smarts_argument()?));
        }
        if self.at_word("COUNT") {
            self.pos += 1;
            let pattern = self.smarts_argument()?;
            let comparison = self.comparison()?;
            let value = self.signed_int()?;
            return Ok(Predicate::Count { pattern, comparison, value });
        }
        if self.at_word("MOLWT") {
            self.pos += 1;
            self.expect_word("IN")?;
            self.expect_punct("[")?;
            let low = self.real()?;
            self.expect_punct(",")?;
            let high = self.real()?;
            self.expect_punct("]")?;
            return Ok(Predicate::MolWeight { low, high });
        }
        if self.at_word("ELEMENTS") {
            self.pos += 1;
            self.expect_word("SUBSET_OF")?;
            self.expect_punct("{")?;
            let mut set = BTreeSet::new();
            if !self.at_punct("}") {
                set.insert(self.element_symbol()?);
                while self.at_punct(",") {
                    self.pos += 1;
                    set.insert(self.element_symbol()?);
                }
            }
            self.expect_punct("}")?;
            return Ok(Predicate::ElementsSubsetOf(set));
        }
        if self.at_word("SINGLE_FRAGMENT") {
            self.pos += 1;
            return Ok(Predicate::SingleFragment);
        }
        let lhs = self.linear()?;
        let comparison = self.comparison()?;
        let rhs = self.linear()?;
        Ok(Predicate::Linear { lhs, comparison, rhs })
    }

    fn linear(&mut self) -> Result<LinearExpr, ProgramError> {
        let mut terms = vec![self.term(false)?];
        loop {
            if self.at_punct("+") {
                self.pos += 1;
                terms.push(self.term(false)?);
            } else if self.at_punct("-") {
                self.pos += 1;
                terms.push(self.term(true)?);
            } else {
                return Ok(LinearExpr { terms });
            }
        }
    }

    /// `[-]int`, `[-]int * metric`, or `[-]metric`.
    fn term(&mut self, negated: bool) -> Result<Term, ProgramError> {
        let mut sign = if negated { -1 } else { 1 };
        if self.at_punct("-") {
            self.pos += 1;
            sign = -sign;
        }
        if let Some(&Tok::Int(n)) = self.peek() {
            self.pos += 1;
            if self.at_punct("*") {
                self.pos += 1;
                let metric = self.metric()?;
                return Ok(Term { coefficient: sign * n, metric: Some(metric) });
            }
            return Ok(Term { coefficient: sign * n, metric: None });
        }
        let metric = self.metric()?;
        Ok(Term { coefficient: sign, metric: Some(metric) })
    }

    fn metric(&mut self) -> Result<Metric, ProgramError> {
        let word = match self.peek() {
            Some(Tok::Word(w)) => w.clone(),
            _ => return Err(self.error(&format!("expected predicate or metric, found {}", self.describe_current()))),
        };
        let metric = match word.as_str() {
            "HTOTAL" => Metric::HTotal,
            "RINGS" => Metric::Rings,
            "CHARGE" => Metric::Charge,
            "TOTALATOMS" => Metric::TotalAtoms,
            "ATOMS" => {
                self.pos += 1;
                self.expect_punct("(")?;
                let z = self.element_symbol()?;
                self.expect_punct(")")?;
                return Ok(Metric::Atoms(z));
            }
            "BONDS" => {
                self.pos += 1;
                self.expect_punct("(")?;
                let order = match self.peek() {
                    Some(Tok::Word(w)) => BondOrder::from_keyword(w),
                    _ => None,
                }
                .ok_or_else(|| {
                    self.error(&format!(
                        "expected SINGLE, DOUBLE, TRIPLE or AROMATIC, found {}",
                        self.describe_current()
                    ))
                })?;
                self.pos += 1;
                self.expect_punct(")")?;
                return Ok(Metric::Bonds(order));
            }
            other => return Err(self.error(&format!("unknown predicate or metric {other:?}"))),
        };
        self.pos += 1;
        Ok(metric)
    }
}

/// Parses program text. Blank lines and `#` comments are ignored; every other
/// line is one statement.
pub fn parse_program(text: &str) -> Result<ClassifierProgram, ProgramError> {
    let mut header: Option<(String, String)> = None;
    let mut definition: Option<String> = None;
    let mut rules = Vec::new();
    let mut default: Option<DefaultVerdict> = None;

    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = strip_comment(raw);
        let trimmed = content.trim_start();
        if trimmed.trim().is_empty() {
            continue;
        }
        let indent = content[..content.len() - trimmed.len()].chars().count();
        let keyword_len = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
        let keyword = &trimmed[..keyword_len];
        let after_keyword = &trimmed[keyword_len..];
        let rest_column = indent + keyword.chars().count() + 1;

        if default.is_some() {
            return Err(syntax(line, indent + 1, "statement after DEFAULT"));
        }

        match keyword {
            "CLASS" => {
                if header.is_some() {
                    return Err(syntax(line, indent + 1, "duplicate CLASS header"));
                }
                let body = after_keyword.trim_start();
                let skipped = after_keyword.len() - body.len();
                let id_len = body.find(char::is_whitespace).unwrap_or(body.len());
                let id = &body[..id_len];
                if id.is_empty() || id.starts_with('"') {
                    return Err(syntax(line, rest_column, "expected class identifier"));
                }
                let name_column = rest_column + after_keyword[..skipped].chars().count() + id.chars().count();
                let mut p = LineParser {
                    tokens: tokenize(&body[id_len..], line, name_column)?,
                    pos: 0,
                    line,
                    end_column: content.trim_end().chars().count() + 1,
                };
                let name = p.expect_string()?;
                p.expect_end()?;
                header = Some((id.to_string(), name));
            }
            "DEFINITION" | "RULE" | "DEFAULT" => {
                if header.is_none() {
                    return Err(syntax(line, indent + 1, "expected CLASS header first"));
                }
                let mut p = LineParser {
                    tokens: tokenize(after_keyword, line, rest_column)?,
                    pos: 0,
                    line,
                    end_column: content.trim_end().chars().count() + 1,
                };
                match keyword {
                    "DEFINITION" => {
                        if definition.is_some() || !rules.is_empty() {
                            return Err(syntax(line, indent + 1, "DEFINITION must directly follow CLASS"));
                        }
                        definition = Some(p.expect_string()?);
                    }
                    "RULE" => {
                        let action = p.action()?;
                        p.expect_word("IF")?;
                        let condition = p.expr()?;
                        p.expect_word("REASON")?;
                        let reason = p.expect_string()?;
                        rules.push(Rule { action, condition, reason });
                    }
                    _ => {
                        let action = p.action()?;
                        p.expect_word("REASON")?;
                        let reason = p.expect_string()?;
                        default = Some(DefaultVerdict { action, reason });
                    }
                }
                p.expect_end()?;
            }
            other => {
                return Err(syntax(
                    line,
                    indent + 1,
                    &format!("unknown statement {other:?}; expected CLASS, DEFINITION, RULE or DEFAULT"),
                ))
            }
        }
    }

    let (class_id, class_name) = header.ok_or(ProgramError::MissingClass)?;
    let default = default.ok_or(ProgramError::MissingDefault)?;
    Ok(ClassifierProgram { class_id, class_name, definition, rules, default, attempt_history: Vec::new() })
}

impl std::str::FromStr for ClassifierProgram {
    type Err = ProgramError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_program(s)
    }
}
