//! SMARTS subset: compilation into pattern graphs and backtracking substructure
//! matching against [`Molecule`]s.
//!
//! Supported: element symbols (uppercase aliphatic, lowercase aromatic), `*`,
//! bracket expressions with `,` disjunction, charges, `H<n>`, `X<n>`, bonds
//! `- = # : ~`, the default single-or-aromatic bond, branches, ring closures and
//! `.`. Recursive SMARTS, negation, `&`/`;`, ring primitives and directional
//! bonds are rejected.

use std::collections::{BTreeMap, HashSet};

use crate::elements;
use crate::molgraph::{BondOrder, DiagnosticKind, Molecule, ParseDiagnostic};

use DiagnosticKind::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementTest {
    Any,
    /// `aromatic: None` accepts either aromatic state.
    Element {
        atomic_number: u8,
        aromatic: Option<bool>,
    },
}

/// Primitives joined by implicit AND, e.g. `CX3H0+`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AtomConjunction {
    pub element: ElementTest,
    pub charge: Option<i8>,
    pub hydrogens: Option<u8>,
    pub connections: Option<u8>,
}

/// A pattern atom: one or more conjunctions joined by OR.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomPredicate {
    pub alternatives: Vec<AtomConjunction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondPredicate {
    Order(BondOrder),
    SingleOrAromatic,
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatternBond {
    pub begin: usize,
    pub end: usize,
    pub predicate: BondPredicate,
}

/// Compiled SMARTS pattern. Immutable and cheap to share.
#[derive(Debug, Clone, PartialEq)]
pub struct SmartsPattern {
    atoms: Vec<AtomPredicate>,
    bonds: Vec<PatternBond>,
    source: String,
    adjacency: Vec<Vec<(usize, usize)>>,
}

/// All embeddings of a pattern in a molecule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchSet {
    /// `embeddings[k][p]` is the molecule atom matched by pattern atom `p`.
    pub embeddings: Vec<Vec<usize>>,
    pub unique_atom_sets: usize,
}

impl AtomConjunction {
    fn matches(&self, mol: &Molecule, atom: usize) -> bool {
        let a = &mol.atoms()[atom];
        if let ElementTest::Element { atomic_number, aromatic } = self.element {
            if a.atomic_number != atomic_number {
                return false;
            }
            if aromatic.is_some_and(|ar| ar != a.is_aromatic) {
                return false;
            }
        }
        if self.charge.is_some_and(|c| c != a.formal_charge) {
            return false;
        }
        if self.hydrogens.is_some_and(|h| h as u32 != mol.attached_hydrogens(atom)) {
            return false;
        }
        if self.connections.is_some_and(|x| x as u32 != mol.total_connections(atom)) {
            return false;
        }
        true
    }
}

impl AtomPredicate {
    pub fn matches(&self, mol: &Molecule, atom: usize) -> bool {
        self.alternatives.iter().any(|c| c.matches(mol, atom))
    }
}

impl BondPredicate {
    pub fn matches(self, order: BondOrder) -> bool {
        match self {
            BondPredicate::Any => true,
            BondPredicate::SingleOrAromatic => matches!(order, BondOrder::Single | BondOrder::Aromatic),
            BondPredicate::Order(o) => o == order,
        }
    }
}

impl SmartsPattern {
    pub fn atoms(&self) -> &[AtomPredicate] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[PatternBond] {
        &self.bonds
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn has_match(&self, mol: &Molecule) -> bool {
        let mut found = false;
        self.search(mol, &mut |_| {
            found = true;
            false
        });
        found
    }

    /// Number of distinct matched atom sets.
    pub fn count_matches(&self, mol: &Molecule) -> usize {
        let mut sets = HashSet::new();
        self.search(mol, &mut |image| {
            let mut set = image.to_vec();
            set.sort_unstable();
            sets.insert(set);
            true
        });
        sets.len()
    }

    pub fn match_set(&self, mol: &Molecule) -> MatchSet {
        let mut embeddings = Vec::new();
        let mut sets = HashSet::new();
        self.search(mol, &mut |image| {
            embeddings.push(image.to_vec());
            let mut set = image.to_vec();
            set.sort_unstable();
            sets.insert(set);
            true
        });
        embeddings.sort();
        MatchSet { embeddings, unique_atom_sets: sets.len() }
    }

    /// Visits every embedding (indexed by pattern atom) until `visit` returns false.
    fn search(&self, mol: &Molecule, visit: &mut dyn FnMut(&[usize]) -> bool) {
        let n = self.atoms.len();
        let m = mol.atoms().len();
        if n == 0 || n > m {
            return;
        }
        let allowed: Vec<Vec<bool>> =
            self.atoms.iter().map(|pred| (0..m).map(|a| pred.matches(mol, a)).collect()).collect();
        let counts: Vec<usize> = allowed.iter().map(|row| row.iter().filter(|&&ok| ok).count()).collect();
        if counts.contains(&0) {
            return;
        }
        let plan = self.plan(&counts);
        let mut state = SearchState {
            pattern: self,
            mol,
            allowed: &allowed,
            plan: &plan,
            image: vec![usize::MAX; n],
            used: vec![false; m],
        };
        state.extend(0, visit);
    }

    /// Visit order: each component starts from its rarest atom and grows
    /// breadth-first, so every later atom has an already-placed parent.
    fn plan(&self, candidate_counts: &[usize]) -> Vec<(usize, Option<usize>)> {
        let n = self.atoms.len();
        let mut placed = vec![false; n];
        let mut plan = Vec::with_capacity(n);
        while plan.len() < n {
            let start = (0..n)
                .filter(|&p| !placed[p])
                .min_by_key(|&p| (candidate_counts[p], std::cmp::Reverse(self.adjacency[p].len()), p))
                .expect("unplaced atom exists");
            placed[start] = true;
            plan.push((start, None));
            let mut head = plan.len() - 1;
            while head < plan.len() {
                let (p, _) = plan[head];
                head += 1;
                let mut next: Vec<usize> = self.adjacency[p].iter().map(|&(q, _)| q).filter(|&q| !placed[q]).collect();
                next.sort_by_key(|&q| (candidate_counts[q], q));
                next.dedup();
                for q in next {
                    if !placed[q] {
                        placed[q] = true;
                        plan.push((q, Some(p)));
                    }
                }
            }
        }
        plan
    }
}

struct SearchState<'a> {
    pattern: &'a SmartsPattern,
    mol: &'a Molecule,
    allowed: &'a [Vec<bool>],
    plan: &'a [(usize, Option<usize>)],
    image: Vec<usize>,
    used: Vec<bool>,
}

impl SearchState<'_> {
    /// Returns false once the visitor asks to stop.
    fn extend(&mut self, depth: usize, visit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if depth == self.plan.len() {
            return visit(&self.image);
        }
        let (p, parent) = self.plan[depth];
        let candidates: Vec<usize> = match parent {
            Some(q) => self.mol.neighbors(self.image[q]).iter().map(|&(a, _)| a).collect(),
            None => (0..self.mol.atoms().len()).collect(),
        };
        for a in candidates {
            if self.used[a] || !self.allowed[p][a] || !self.bonds_consistent(p, a) {
                continue;
            }
            self.image[p] = a;
            self.used[a] = true;
            let keep_going = self.extend(depth + 1, visit);
            self.used[a] = false;
            self.image[p] = usize::MAX;
            if !keep_going {
                return false;
            }
        }
        true
    }

    fn bonds_consistent(&self, p: usize, a: usize) -> bool {
        self.pattern.adjacency[p].iter().all(|&(q, bond)| {
            let b = self.image[q];
            if b == usize::MAX {
                return true;
            }
            let predicate = self.pattern.bonds[bond].predicate;
            self.mol
                .neighbors(a)
                .iter()
                .find(|&&(n, _)| n == b)
                .is_some_and(|&(_, mb)| predicate.matches(self.mol.bonds()[mb].order))
        })
    }
}

/// Compiles a SMARTS string in the supported subset.
pub fn parse_smarts(text: &str) -> Result<SmartsPattern, ParseDiagnostic> {
    let (atoms, bonds) = SmartsParser { input: text.as_bytes(), pos: 0 }.parse()?;
    let mut adjacency = vec![Vec::new(); atoms.len()];
    for (i, bond) in bonds.iter().enumerate() {
        adjacency[bond.begin].push((bond.end, i));
        adjacency[bond.end].push((bond.begin, i));
    }
    Ok(SmartsPattern { atoms, bonds, source: text.to_string(), adjacency })
}

impl std::str::FromStr for SmartsPattern {
    type Err = ParseDiagnostic;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_smarts(s)
    }
}

pub fn has_substructure_match(pattern: &SmartsPattern, mol: &Molecule) -> bool {
    pattern.has_match(mol)
}

pub fn count_substructure_matches(pattern: &SmartsPattern, mol: &Molecule) -> usize {
    pattern.count_matches(mol)
}

struct SmartsParser<'a> {
    input: &'a [u8],
    pos: usize,
}

impl SmartsParser<'_> {
    fn err<T>(&self, kind: DiagnosticKind, position: usize, msg: impl Into<String>) -> Result<T, ParseDiagnostic> {
        Err(ParseDiagnostic::new(kind, position.min(self.input.len()), msg))
    }

    fn peek(&self) -> Option<u8> {
        self.input.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<u8> {
        self.input.get(self.pos + offset).copied()
    }

    fn parse(&mut self) -> Result<(Vec<AtomPredicate>, Vec<PatternBond>), ParseDiagnostic> {
        let mut atoms: Vec<AtomPredicate> = Vec::new();
        let mut bonds: Vec<PatternBond> = Vec::new();
        let mut bonded = HashSet::new();
        let mut prev: Option<usize> = None;
        let mut pending: Option<(BondPredicate, usize)> = None;
        let mut branches: Vec<(usize, usize, usize)> = Vec::new();
        let mut rings: BTreeMap<u16, (usize, Option<BondPredicate>, usize)> = BTreeMap::new();

        if self.input.is_empty() {
            return self.err(UnsupportedFeature, 0, "empty SMARTS");
        }

        let mut connect = |a: usize, b: usize, predicate: BondPredicate, pos: usize, bonds: &mut Vec<PatternBond>| {
            if a == b || !bonded.insert((a.min(b), a.max(b))) {
                return Err(ParseDiagnostic::new(UnsupportedFeature, pos, "invalid ring bond"));
            }
            bonds.push(PatternBond { begin: a, end: b, predicate });
            Ok(())
        };

        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'(' => {
                    let Some(p) = prev else {
                        return self.err(UnbalancedBranch, start, "branch opened before any atom");
                    };
                    if pending.is_some() {
                        return self.err(UnsupportedFeature, start, "bond symbol before '('");
                    }
                    branches.push((p, start, atoms.len()));
                    self.pos += 1;
                }
                b')' => {
                    let Some((p, _, before)) = branches.pop() else {
                        return self.err(UnbalancedBranch, start, "unmatched ')'");
                    };
                    if pending.is_some() || atoms.len() == before {
                        return self.err(UnbalancedBranch, start, "empty or dangling branch");
                    }
                    prev = Some(p);
                    self.pos += 1;
                }
                b'.' => {
                    if prev.is_none() || pending.is_some() || !branches.is_empty() {
                        return self.err(UnsupportedFeature, start, "misplaced '.'");
                    }
                    prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let label = if c == b'%' {
                        match (self.peek_at(1), self.peek_at(2)) {
                            (Some(a @ b'0'..=b'9'), Some(b @ b'0'..=b'9')) => {
                                self.pos += 3;
                                ((a - b'0') as u16) * 10 + (b - b'0') as u16
                            }
                            _ => return self.err(UnsupportedFeature, start, "'%' must be followed by two digits"),
                        }
                    } else {
                        self.pos += 1;
                        (c - b'0') as u16
                    };
                    let Some(p) = prev else {
                        return self.err(UnsupportedFeature, start, "ring bond before any atom");
                    };
                    let bond = pending.take().map(|(b, _)| b);
                    match rings.remove(&label) {
                        Some((q, open_bond, _)) => {
                            let predicate = match (open_bond, bond) {
                                (Some(a), Some(b)) if a != b => {
                                    return self.err(UnsupportedFeature, start, "conflicting ring bonds")
                                }
                                (Some(a), _) | (None, Some(a)) => a,
                                (None, None) => BondPredicate::SingleOrAromatic,
                            };
                            connect(q, p, predicate, start, &mut bonds)?;
                        }
                        None => {
                            rings.insert(label, (p, bond, start));
                        }
                    }
                }
                b'-' | b'=' | b'#' | b':' | b'~' => {
                    if prev.is_none() || pending.is_some() {
                        return self.err(UnsupportedFeature, start, "misplaced bond symbol");
                    }
                    let predicate = match c {
                        b'-' => BondPredicate::Order(BondOrder::Single),
                        b'=' => BondPredicate::Order(BondOrder::Double),
                        b'#' => BondPredicate::Order(BondOrder::Triple),
                        b':' => BondPredicate::Order(BondOrder::Aromatic),
                        _ => BondPredicate::Any,
                    };
                    pending = Some((predicate, start));
                    self.pos += 1;
                }
                b'/' | b'\\' => return self.err(UnsupportedFeature, start, "directional bonds"),
                b'@' => return self.err(UnsupportedFeature, start, "ring bond primitive"),
                b'!' | b'&' | b';' | b',' => return self.err(UnsupportedFeature, start, "logical bond operators"),
                b'$' => return self.err(UnsupportedFeature, start, "recursive SMARTS"),
                _ => {
                    let atom = if c == b'[' { self.bracket()? } else { self.bare_atom()? };
                    let index = atoms.len();
                    atoms.push(atom);
                    if let Some(p) = prev {
                        let predicate = pending.take().map_or(BondPredicate::SingleOrAromatic, |(b, _)| b);
                        connect(p, index, predicate, start, &mut bonds)?;
                    }
                    prev = Some(index);
                }
            }
        }
        if let Some((_, pos)) = pending {
            return self.err(UnsupportedFeature, pos, "dangling bond");
        }
        if let Some(&(_, pos, _)) = branches.last() {
            return self.err(UnbalancedBranch, pos, "unclosed '('");
        }
        if let Some((label, &(_, _, pos))) = rings.iter().next() {
            return self.err(UnclosedRing, pos, format!("ring bond {label} never closed"));
        }
        Ok((atoms, bonds))
    }

    fn bare_atom(&mut self) -> Result<AtomPredicate, ParseDiagnostic> {
        let start = self.pos;
        let c = self.input[start];
        let element = match (c, self.peek_at(1)) {
            (b'*', _) => {
                self.pos += 1;
                ElementTest::Any
            }
            (b'C', Some(b'l')) | (b'B', Some(b'r')) => {
                self.pos += 2;
                let z = if c == b'C' { 17 } else { 35 };
                ElementTest::Element { atomic_number: z, aromatic: Some(false) }
            }
            (b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I', _) => {
                self.pos += 1;
                let z = elements::by_symbol(std::str::from_utf8(&[c]).unwrap_or_default())
                    .map(|e| e.atomic_number)
                    .unwrap_or_default();
                ElementTest::Element { atomic_number: z, aromatic: Some(false) }
            }
            (b'b' | b'c' | b'n' | b'o' | b'p' | b's', _) => {
                self.pos += 1;
                let z = elements::aromatic_symbol(std::str::from_utf8(&[c]).unwrap_or_default()).unwrap_or_default();
                ElementTest::Element { atomic_number: z, aromatic: Some(true) }
            }
            (b'a' | b'A' | b'R' | b'r' | b'D' | b'X' | b'x' | b'v' | b'h', _) => {
                return self.err(UnsupportedFeature, start, format!("primitive {:?} outside the subset", c as char))
            }
            _ if c.is_ascii_alphabetic() => {
                return self.err(UnknownElement, start, format!("{:?} is not an organic-subset atom", c as char))
            }
            _ => return self.err(UnsupportedFeature, start, format!("unexpected character {:?}", c as char)),
        };
        Ok(AtomPredicate {
            alternatives: vec![AtomConjunction { element, charge: None, hydrogens: None, connections: None }],
        })
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.input[start..self.pos]).ok()?.parse().ok()
    }

    fn bracket(&mut self) -> Result<AtomPredicate, ParseDiagnostic> {
        let open = self.pos;
        self.pos += 1;
        let Some(close) = self.input[self.pos..].iter().position(|&c| c == b']').map(|p| p + self.pos) else {
            return self.err(BadBracket, open, "unterminated '['");
        };
        if close == self.pos {
            return self.err(BadBracket, open, "empty brackets");
        }
        let body = &self.input[self.pos..close];
        if body.contains(&b'$') {
            return self.err(UnsupportedFeature, self.pos, "recursive SMARTS");
        }
        let mut raw: Vec<(AtomConjunction, bool)> = Vec::new();
        loop {
            raw.push(self.conjunction(close)?);
            match self.peek() {
                Some(b',') if self.pos < close => self.pos += 1,
                _ => break,
            }
        }
        if self.pos != close {
            return self.err(BadBracket, self.pos, "unexpected text inside brackets");
        }
        self.pos += 1;
        // A lone uppercase element is aliphatic; inside a list it matches either state.
        let is_list = raw.len() > 1;
        let alternatives = raw
            .into_iter()
            .map(|(mut conj, uppercase)| {
                if let ElementTest::Element { aromatic, .. } = &mut conj.element {
                    if uppercase {
                        *aromatic = if is_list { None } else { Some(false) };
                    }
                }
                conj
            })
            .collect();
        Ok(AtomPredicate { alternatives })
    }

    /// Parses primitives up to `,` or `]`. The flag reports an uppercase element symbol.
    fn conjunction(&mut self, close: usize) -> Result<(AtomConjunction, bool), ParseDiagnostic> {
        let begin = self.pos;
        let mut conj = AtomConjunction { element: ElementTest::Any, charge: None, hydrogens: None, connections: None };
        let mut has_element = false;
        let mut uppercase = false;
        while self.pos < close {
            let start = self.pos;
            let c = self.input[start];
            match c {
                b',' => break,
                b'*' => {
                    if has_element {
                        return self.err(UnsupportedFeature, start, "two element primitives in one conjunction");
                    }
                    has_element = true;
                    self.pos += 1;
                }
                b'+' | b'-' => {
                    self.pos += 1;
                    let magnitude = match self.number() {
                        Some(n) => n,
                        None => {
                            let mut n = 1;
                            while self.pos < close && self.input[self.pos] == c {
                                n += 1;
                                self.pos += 1;
                            }
                            n
                        }
                    };
                    if magnitude > 15 || conj.charge.is_some() {
                        return self.err(BadCharge, start, "malformed charge");
                    }
                    let sign = if c == b'+' { 1 } else { -1 };
                    conj.charge = Some((sign * magnitude as i32) as i8);
                }
                b'@' => {
                    // chirality is not compared
                    self.pos += 1;
                    if self.peek() == Some(b'@') {
                        self.pos += 1;
                    }
                }
                b'H' if self.pos == begin
                    && matches!(self.peek_at(1), Some(b']' | b'+' | b'-' | b','))
                    && !has_element =>
                {
                    has_element = true;
                    uppercase = true;
                    conj.element = ElementTest::Element { atomic_number: 1, aromatic: Some(false) };
                    self.pos += 1;
                }
                b'H' | b'X' => {
                    self.pos += 1;
                    let n = self.number().unwrap_or(1);
                    if n > 15 {
                        return self.err(BadBracket, start, "count too large");
                    }
                    let slot = if c == b'H' { &mut conj.hydrogens } else { &mut conj.connections };
                    if slot.is_some() {
                        return self.err(BadBracket, start, "repeated primitive");
                    }
                    *slot = Some(n as u8);
                }
                b'!' | b'&' | b';' => return self.err(UnsupportedFeature, start, "logical operators"),
                b'#' => return self.err(UnsupportedFeature, start, "atomic-number primitive"),
                b'0'..=b'9' => return self.err(UnsupportedFeature, start, "isotope primitive"),
                b'R' | b'r' | b'D' | b'v' | b'a' | b'A' | b'h' | b'x' => {
                    return self.err(UnsupportedFeature, start, format!("primitive {:?} outside the subset", c as char))
                }
                b'a'..=b'z' | b'A'..=b'Z' => {
                    if has_element {
                        return self.err(UnsupportedFeature, start, "two element primitives in one conjunction");
                    }
                    let (z, upper) = self.bracket_element(close)?;
                    has_element = true;
                    uppercase = upper;
                    conj.element = ElementTest::Element {
                        atomic_number: z,
                        aromatic: if upper { Some(false) } else { Some(true) },
                    };
                }
                _ => return self.err(BadBracket, start, format!("unexpected {:?} inside brackets", c as char)),
            }
        }
        if self.pos == begin {
            return self.err(BadBracket, begin, "empty alternative");
        }
        Ok((conj, uppercase))
    }

    fn bracket_element(&mut self, close: usize) -> Result<(u8, bool), ParseDiagnostic> {
        let start = self.pos;
        let c = self.input[start];
        let text = |len: usize| {
            self.input
                .get(start..(start + len).min(close))
                .and_then(|s| std::str::from_utf8(s).ok())
                .filter(|s| s.len() == len)
        };
        if c.is_ascii_lowercase() {
            for len in [2, 1] {
                if let Some(z) = text(len).and_then(elements::aromatic_symbol) {
                    self.pos += len;
                    return Ok((z, false));
                }
            }
            return self.err(UnknownElement, start, "unknown aromatic symbol");
        }
        if let Some(e) = text(2).filter(|s| s.as_bytes()[1].is_ascii_lowercase()).and_then(elements::by_symbol) {
            self.pos += 2;
            return Ok((e.atomic_number, true));
        }
        match text(1).and_then(elements::by_symbol) {
            Some(e) => {
                self.pos += 1;
                Ok((e.atomic_number, true))
            }
            None => self.err(UnknownElement, start, format!("unknown element {:?}", c as char)),
        }
    }
}
