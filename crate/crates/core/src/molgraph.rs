//! SMILES parsing into an immutable molecular graph, plus the descriptors the
//! classifier language is built on.
//!
//! The accepted grammar is a subset of OpenSMILES: organic-subset atoms, bracket
//! atoms (isotope, symbol, `@`/`@@`, H count, charge), bonds `- = # : / \`,
//! branches, ring closures (`0-9`, `%nn`) and `.` disconnections. Stereo markers
//! are consumed and dropped. Anything else is rejected with a [`ParseDiagnostic`].
//!
//! Aromaticity is purely notational: lowercase atoms are aromatic, nothing is
//! perceived or kekulized.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elements::{self, HYDROGEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Bond order doubled, so aromatic bonds (1.5) stay integral.
    pub(crate) fn doubled(self) -> u32 {
        match self {
            BondOrder::Single => 2,
            BondOrder::Double => 4,
            BondOrder::Triple => 6,
            BondOrder::Aromatic => 3,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            BondOrder::Single => "SINGLE",
            BondOrder::Double => "DOUBLE",
            BondOrder::Triple => "TRIPLE",
            BondOrder::Aromatic => "AROMATIC",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        match word {
            "SINGLE" => Some(BondOrder::Single),
            "DOUBLE" => Some(BondOrder::Double),
            "TRIPLE" => Some(BondOrder::Triple),
            "AROMATIC" => Some(BondOrder::Aromatic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub atomic_number: u8,
    pub formal_charge: i8,
    pub is_aromatic: bool,
    /// Hydrogen count written inside brackets (`[CH3]`). `None` when the atom
    /// was not bracketed or the bracket had no H spec.
    pub explicit_h: Option<u8>,
    pub isotope: Option<u16>,
    /// Written in brackets. Bracket atoms never receive implicit hydrogens.
    pub bracketed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub begin: usize,
    pub end: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.begin == atom {
            self.end
        } else {
            self.begin
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    UnbalancedBranch,
    UnclosedRing,
    UnknownElement,
    BadCharge,
    BadBracket,
    UnsupportedFeature,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DiagnosticKind::UnbalancedBranch => "unbalanced_branch",
            DiagnosticKind::UnclosedRing => "unclosed_ring",
            DiagnosticKind::UnknownElement => "unknown_element",
            DiagnosticKind::BadCharge => "bad_charge",
            DiagnosticKind::BadBracket => "bad_bracket",
            DiagnosticKind::UnsupportedFeature => "unsupported_feature",
        };
        f.write_str(s)
    }
}

/// Why a SMILES (or SMARTS) string was rejected, and where.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at offset {position}: {message}")]
pub struct ParseDiagnostic {
    pub kind: DiagnosticKind,
    /// Character offset into the input, always `<= input.len()`.
    pub position: usize,
    pub message: String,
}

impl ParseDiagnostic {
    pub(crate) fn new(kind: DiagnosticKind, position: usize, message: impl Into<String>) -> Self {
        ParseDiagnostic { kind, position, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MassError {
    #[error("no mass tabulated for isotope {mass_number}{symbol}")]
    UnsupportedIsotope { symbol: &'static str, mass_number: u16 },
}

/// Parsed molecular graph. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    source: String,
    /// Hydrogen count carried by each atom (bracket count or implicit).
    hydrogens: Vec<u8>,
    adjacency: Vec<Vec<(usize, usize)>>,
    components: usize,
}

impl Molecule {
    fn build(atoms: Vec<Atom>, bonds: Vec<Bond>, source: String) -> Self {
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (index, bond) in bonds.iter().enumerate() {
            adjacency[bond.begin].push((bond.end, index));
            adjacency[bond.end].push((bond.begin, index));
        }
        let hydrogens = atoms
            .iter()
            .enumerate()
            .map(|(i, atom)| carried_hydrogens(atom, adjacency[i].iter().map(|&(_, b)| bonds[b].order)))
            .collect();
        let components = count_components(&adjacency);
        Molecule { atoms, bonds, source, hydrogens, adjacency, components }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    /// The SMILES text this molecule was parsed from.
    pub fn source(&self) -> &str {
        &self.source
    }

    /// `(neighbor atom, bond index)` pairs for `atom`.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    /// Hydrogens carried by `atom` that are not graph atoms.
    pub fn carried_hydrogens(&self, atom: usize) -> u8 {
        self.hydrogens[atom]
    }

    /// All hydrogens attached to `atom`: carried ones plus bonded `[H]` atoms.
    pub fn attached_hydrogens(&self, atom: usize) -> u32 {
        let graph_h =
            self.adjacency[atom].iter().filter(|&&(n, _)| self.atoms[n].atomic_number == HYDROGEN).count() as u32;
        self.hydrogens[atom] as u32 + graph_h
    }

    /// Number of connections including carried hydrogens (SMARTS `X`).
    pub fn total_connections(&self, atom: usize) -> u32 {
        self.adjacency[atom].len() as u32 + self.hydrogens[atom] as u32
    }

    pub fn component_count(&self) -> usize {
        self.components
    }

    /// Sum of hydrogens that are not graph atoms: bracket H counts plus
    /// valence-derived implicit hydrogens.
    pub fn implicit_hydrogen_total(&self) -> u32 {
        self.hydrogens.iter().map(|&h| h as u32).sum()
    }

    pub fn net_formal_charge(&self) -> i32 {
        self.atoms.iter().map(|a| a.formal_charge as i32).sum()
    }

    /// Circuit rank: bonds - atoms + connected components.
    pub fn ring_count(&self) -> usize {
        self.bonds.len() + self.components - self.atoms.len()
    }

    /// Atoms of the given element. Counting hydrogen (1) includes carried hydrogens.
    pub fn atom_count(&self, atomic_number: u8) -> u32 {
        let graph = self.atoms.iter().filter(|a| a.atomic_number == atomic_number).count() as u32;
        if atomic_number == HYDROGEN {
            graph + self.implicit_hydrogen_total()
        } else {
            graph
        }
    }

    pub fn element_set(&self) -> BTreeSet<u8> {
        let mut set: BTreeSet<u8> = self.atoms.iter().map(|a| a.atomic_number).collect();
        if self.implicit_hydrogen_total() > 0 {
            set.insert(HYDROGEN);
        }
        set
    }

    pub fn bond_count(&self, order: BondOrder) -> usize {
        self.bonds.iter().filter(|b| b.order == order).count()
    }

    /// Monoisotopic mass including carried hydrogens.
    pub fn exact_molecular_weight(&self) -> Result<f64, MassError> {
        let h_mass = elements::by_number(HYDROGEN).map(|e| e.monoisotopic_mass).unwrap_or_default();
        let mut total = self.implicit_hydrogen_total() as f64 * h_mass;
        for atom in &self.atoms {
            total += atom_mass(atom)?;
        }
        Ok(total)
    }

    /// Hill-order formula: C then H then the rest alphabetically when carbon is
    /// present, otherwise everything alphabetically. Charge is not written.
    pub fn molecular_formula(&self) -> String {
        let mut counts: BTreeMap<&'static str, u32> = BTreeMap::new();
        for atom in &self.atoms {
            *counts.entry(elements::symbol(atom.atomic_number)).or_default() += 1;
        }
        let h = self.implicit_hydrogen_total();
        if h > 0 {
            *counts.entry("H").or_default() += h;
        }
        let mut out = String::new();
        let mut push = |symbol: &str, n: u32| {
            out.push_str(symbol);
            if n > 1 {
                out.push_str(&n.to_string());
            }
        };
        if let Some(c) = counts.remove("C") {
            push("C", c);
            if let Some(h) = counts.remove("H") {
                push("H", h);
            }
        }
        for (symbol, n) in counts {
            push(symbol, n);
        }
        out
    }
}

fn atom_mass(atom: &Atom) -> Result<f64, MassError> {
    let element = elements::by_number(atom.atomic_number).expect("atomic number validated at parse");
    match atom.isotope {
        None => Ok(element.monoisotopic_mass),
        Some(mass_number) => elements::isotope_mass(atom.atomic_number, mass_number)
            .ok_or(MassError::UnsupportedIsotope { symbol: element.symbol, mass_number }),
    }
}

fn carried_hydrogens(atom: &Atom, orders: impl Iterator<Item = BondOrder>) -> u8 {
    if atom.bracketed {
        return atom.explicit_h.unwrap_or(0);
    }
    let Some(element) = elements::by_number(atom.atomic_number) else {
        return 0;
    };
    // Aromatic bonds weigh 1.5; the sum is rounded down.
    let used = orders.map(BondOrder::doubled).sum::<u32>() / 2;
    let candidates: &[u8] =
        if atom.is_aromatic { &element.valences[..element.valences.len().min(1)] } else { element.valences };
    candidates.iter().map(|&v| v as u32).find(|&v| v >= used).map_or(0, |v| (v - used) as u8)
}

fn count_components(adjacency: &[Vec<(usize, usize)>]) -> usize {
    let mut seen = vec![false; adjacency.len()];
    let mut components = 0;
    let mut stack = Vec::new();
    for start in 0..adjacency.len() {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(a) = stack.pop() {
            for &(n, _) in &adjacency[a] {
                if !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
    }
    components
}

/// Parses a SMILES string. Leading and trailing whitespace is ignored.
pub fn parse_smiles(text: &str) -> Result<Molecule, ParseDiagnostic> {
    let trimmed = text.trim();
    let offset = text.len() - text.trim_start().len();
    SmilesParser::new(trimmed).parse().map(|(atoms, bonds)| Molecule::build(atoms, bonds, trimmed.to_string())).map_err(
        |mut d| {
            d.position += offset;
            d
        },
    )
}

impl std::str::FromStr for Molecule {
    type Err = ParseDiagnostic;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_smiles(s)
    }
}

struct RingBond {
    atom: usize,
    order: Option<BondOrder>,
    position: usize,
}

struct SmilesParser<'a> {
    input: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    bonded: BTreeSet<(usize, usize)>,
    prev: Option<usize>,
    pending: Option<(BondOrder, usize)>,
    branches: Vec<(usize, usize, usize)>,
    rings: BTreeMap<u16, RingBond>,
}

use DiagnosticKind::*;

impl<'a> SmilesParser<'a> {
    fn new(input: &'a str) -> Self {
        SmilesParser {
            input: input.as_bytes(),
            pos: 0,
            atoms: Vec::new(),
            bonds: Vec::new(),
            bonded: BTreeSet::new(),
            prev: None,
            pending: None,
            branches: Vec::new(),
            rings: BTreeMap::new(),
        }
    }

    fn err<T>(&self, kind: DiagnosticKind, position: usize, msg: impl Into<String>) -> Result<T, ParseDiagnostic> {
        Err(ParseDiagnostic::new(kind, position.min(self.input.len()), msg))
    }

    fn peek(&self) -> Option<u8> {
        self.input.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<u8> {
        self.input.get(self.pos + offset).copied()
    }

    fn parse(mut self) -> Result<(Vec<Atom>, Vec<Bond>), ParseDiagnostic> {
        if self.input.is_empty() {
            return self.err(UnsupportedFeature, 0, "empty SMILES");
        }
        while let Some(c) = self.peek() {
            match c {
                b'(' => {
                    let Some(prev) = self.prev else {
                        return self.err(UnbalancedBranch, self.pos, "branch opened before any atom");
                    };
                    if self.pending.is_some() {
                        return self.err(UnsupportedFeature, self.pos, "bond symbol before '('");
                    }
                    self.branches.push((prev, self.pos, self.atoms.len()));
                    self.pos += 1;
                }
                b')' => {
                    let Some((atom, _, atoms_before)) = self.branches.pop() else {
                        return self.err(UnbalancedBranch, self.pos, "unmatched ')'");
                    };
                    if self.pending.is_some() {
                        return self.err(UnsupportedFeature, self.pos, "dangling bond before ')'");
                    }
                    if self.atoms.len() == atoms_before {
                        return self.err(UnbalancedBranch, self.pos, "empty branch");
                    }
                    self.prev = Some(atom);
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                b'.' => {
                    if self.prev.is_none() || self.pending.is_some() {
                        return self.err(UnsupportedFeature, self.pos, "misplaced '.'");
                    }
                    if !self.branches.is_empty() {
                        return self.err(UnbalancedBranch, self.pos, "'.' inside a branch");
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'-' | b'/' | b'\\' => self.bond_symbol(BondOrder::Single)?,
                b'=' => self.bond_symbol(BondOrder::Double)?,
                b'#' => self.bond_symbol(BondOrder::Triple)?,
                b':' => self.bond_symbol(BondOrder::Aromatic)?,
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom)?;
                }
                c if c.is_ascii_alphabetic() => {
                    let atom = self.organic_atom()?;
                    self.add_atom(atom)?;
                }
                b'*' => return self.err(UnsupportedFeature, self.pos, "wildcard atom"),
                _ => {
                    return self.err(UnsupportedFeature, self.pos, format!("unexpected character {:?}", c as char));
                }
            }
        }
        if let Some((order, position)) = self.pending {
            return self.err(UnsupportedFeature, position, format!("dangling {order:?} bond"));
        }
        if let Some(&(_, position, _)) = self.branches.last() {
            return self.err(UnbalancedBranch, position, "unclosed '('");
        }
        if let Some((label, ring)) = self.rings.iter().next() {
            return self.err(UnclosedRing, ring.position, format!("ring bond {label} never closed"));
        }
        if self.atoms.is_empty() {
            return self.err(UnsupportedFeature, 0, "no atoms");
        }
        Ok((self.atoms, self.bonds))
    }

    fn bond_symbol(&mut self, order: BondOrder) -> Result<(), ParseDiagnostic> {
        if self.pending.is_some() {
            return self.err(UnsupportedFeature, self.pos, "two consecutive bond symbols");
        }
        if self.prev.is_none() {
            return self.err(UnsupportedFeature, self.pos, "bond symbol without a preceding atom");
        }
        self.pending = Some((order, self.pos));
        self.pos += 1;
        Ok(())
    }

    fn default_order(&self, a: usize, b: usize) -> BondOrder {
        if self.atoms[a].is_aromatic && self.atoms[b].is_aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn connect(&mut self, a: usize, b: usize, order: BondOrder, position: usize) -> Result<(), ParseDiagnostic> {
        if a == b {
            return self.err(UnsupportedFeature, position, "atom bonded to itself");
        }
        if !self.bonded.insert((a.min(b), a.max(b))) {
            return self.err(UnsupportedFeature, position, "duplicate bond between the same atoms");
        }
        self.bonds.push(Bond { begin: a, end: b, order });
        Ok(())
    }

    fn add_atom(&mut self, atom: Atom) -> Result<(), ParseDiagnostic> {
        let index = self.atoms.len();
        self.atoms.push(atom);
        if let Some(prev) = self.prev {
            let (order, position) = match self.pending.take() {
                Some((order, position)) => (order, position),
                None => (self.default_order(prev, index), self.pos),
            };
            self.connect(prev, index, order, position)?;
        }
        self.prev = Some(index);
        Ok(())
    }

    fn ring_closure(&mut self) -> Result<(), ParseDiagnostic> {
        let start = self.pos;
        let label = if self.peek() == Some(b'%') {
            match (self.peek_at(1), self.peek_at(2)) {
                (Some(a @ b'0'..=b'9'), Some(b @ b'0'..=b'9')) => {
                    self.pos += 3;
                    ((a - b'0') as u16) * 10 + (b - b'0') as u16
                }
                _ => return self.err(UnsupportedFeature, start, "'%' must be followed by two digits"),
            }
        } else {
            self.pos += 1;
            (self.input[start] - b'0') as u16
        };
        let Some(atom) = self.prev else {
            return self.err(UnsupportedFeature, start, "ring bond before any atom");
        };
        let pending = self.pending.take().map(|(order, _)| order);
        match self.rings.remove(&label) {
            Some(open) => {
                let order = match (open.order, pending) {
                    (Some(a), Some(b)) if a != b => {
                        return self.err(UnsupportedFeature, start, "conflicting ring bond orders");
                    }
                    (Some(a), _) | (None, Some(a)) => a,
                    (None, None) => self.default_order(open.atom, atom),
                };
                self.connect(open.atom, atom, order, start)
            }
            None => {
                self.rings.insert(label, RingBond { atom, order: pending, position: start });
                Ok(())
            }
        }
    }

    fn organic_atom(&mut self) -> Result<Atom, ParseDiagnostic> {
        let start = self.pos;
        let c = self.input[start];
        let next = self.peek_at(1);
        let (atomic_number, aromatic, len) = match (c, next) {
            (b'C', Some(b'l')) => (17, false, 2),
            (b'B', Some(b'r')) => (35, false, 2),
            (b'B', _) => (5, false, 1),
            (b'C', _) => (6, false, 1),
            (b'N', _) => (7, false, 1),
            (b'O', _) => (8, false, 1),
            (b'P', _) => (15, false, 1),
            (b'S', _) => (16, false, 1),
            (b'F', _) => (9, false, 1),
            (b'I', _) => (53, false, 1),
            (b'b', _) => (5, true, 1),
            (b'c', _) => (6, true, 1),
            (b'n', _) => (7, true, 1),
            (b'o', _) => (8, true, 1),
            (b'p', _) => (15, true, 1),
            (b's', _) => (16, true, 1),
            _ => {
                return self.err(
                    UnknownElement,
                    start,
                    format!("{:?} is not an organic-subset atom; use brackets", c as char),
                )
            }
        };
        self.pos += len;
        Ok(Atom {
            atomic_number,
            formal_charge: 0,
            is_aromatic: aromatic,
            explicit_h: None,
            isotope: None,
            bracketed: false,
        })
    }

    fn digits(&mut self) -> Option<u32> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.pos == start {
            return None;
        }
        std::str::from_utf8(&self.input[start..self.pos]).ok()?.parse().ok()
    }

    fn bracket_atom(&mut self) -> Result<Atom, ParseDiagnostic> {
        let open = self.pos;
        self.pos += 1;
        let Some(close) = self.input[self.pos..].iter().position(|&c| c == b']').map(|p| p + self.pos) else {
            return self.err(BadBracket, open, "unterminated '['");
        };
        if close == self.pos {
            return self.err(BadBracket, open, "empty brackets");
        }

        let isotope = match self.digits() {
            Some(0) => return self.err(BadBracket, open + 1, "isotope must be positive"),
            Some(n) if n > u16::MAX as u32 => return self.err(BadBracket, open + 1, "isotope too large"),
            Some(n) => Some(n as u16),
            None => None,
        };

        let (atomic_number, aromatic) = self.bracket_symbol()?;

        if self.peek() == Some(b'@') {
            self.pos += 1;
            if self.peek() == Some(b'@') {
                self.pos += 1;
            } else if let (Some(a), Some(b)) = (self.peek(), self.peek_at(1)) {
                if matches!(&[a, b], b"TH" | b"AL" | b"SP" | b"TB" | b"OH") {
                    return self.err(UnsupportedFeature, self.pos, "extended chirality classes");
                }
            }
        }

        let mut explicit_h = None;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            let count = self.digits().unwrap_or(1);
            if count > 9 {
                return self.err(BadBracket, self.pos, "hydrogen count too large");
            }
            explicit_h = Some(count as u8);
        }

        let formal_charge = self.bracket_charge()?;

        match self.peek() {
            Some(b']') => self.pos += 1,
            Some(b':') => return self.err(UnsupportedFeature, self.pos, "atom classes"),
            _ => return self.err(BadBracket, self.pos, "unexpected text inside brackets"),
        }

        Ok(Atom { atomic_number, formal_charge, is_aromatic: aromatic, explicit_h, isotope, bracketed: true })
    }

    fn bracket_symbol(&mut self) -> Result<(u8, bool), ParseDiagnostic> {
        let start = self.pos;
        let Some(first) = self.peek() else {
            return self.err(BadBracket, start, "missing element symbol");
        };
        if first == b'*' {
            return self.err(UnsupportedFeature, start, "wildcard atom");
        }
        if first.is_ascii_lowercase() {
            for len in [2, 1] {
                if let Some(sym) = self.input.get(start..start + len).and_then(|s| std::str::from_utf8(s).ok()) {
                    if let Some(z) = elements::aromatic_symbol(sym) {
                        self.pos += len;
                        return Ok((z, true));
                    }
                }
            }
            return self.err(UnknownElement, start, "unknown aromatic symbol");
        }
        if !first.is_ascii_uppercase() {
            return self.err(BadBracket, start, "missing element symbol");
        }
        if let Some(second @ b'a'..=b'z') = self.peek_at(1) {
            let sym = [first, second];
            if let Some(e) = elements::by_symbol(std::str::from_utf8(&sym).unwrap_or_default()) {
                self.pos += 2;
                return Ok((e.atomic_number, false));
            }
        }
        let sym = [first];
        match elements::by_symbol(std::str::from_utf8(&sym).unwrap_or_default()) {
            Some(e) => {
                self.pos += 1;
                Ok((e.atomic_number, false))
            }
            None => {
                let end = self.input[start + 1..]
                    .iter()
                    .position(|c| !c.is_ascii_lowercase())
                    .map_or(self.input.len(), |p| p + start + 1);
                let text = String::from_utf8_lossy(&self.input[start..end]);
                self.err(UnknownElement, start, format!("unknown element {text:?}"))
            }
        }
    }

    fn bracket_charge(&mut self) -> Result<i8, ParseDiagnostic> {
        let start = self.pos;
        let sign: i32 = match self.peek() {
            Some(b'+') => 1,
            Some(b'-') => -1,
            _ => return Ok(0),
        };
        let sym = self.input[start];
        self.pos += 1;
        let magnitude = if let Some(n) = self.digits() {
            n as i32
        } else {
            let mut n = 1;
            while self.peek() == Some(sym) {
                n += 1;
                self.pos += 1;
            }
            n
        };
        if matches!(self.peek(), Some(b'+' | b'-')) {
            return self.err(BadCharge, start, "malformed charge");
        }
        if magnitude > 15 {
            return self.err(BadCharge, start, "charge magnitude above 15");
        }
        Ok((sign * magnitude) as i8)
    }
}
