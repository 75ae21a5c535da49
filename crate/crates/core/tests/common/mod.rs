//! Random molecule and pattern generators with oracles that work on the
//! generated graph directly, never on the library's parsed representation.

#![allow(dead_code)]

use std::collections::BTreeSet;

use chemprog_core::molgraph::BondOrder;
use rand::rngs::StdRng;
use rand::Rng;

pub const ORGANIC: [u8; 10] = [5, 6, 7, 8, 15, 16, 9, 17, 35, 53];
pub const AROMATIC_CAPABLE: [u8; 6] = [5, 6, 7, 8, 15, 16];

pub fn symbol(z: u8) -> &'static str {
    match z {
        5 => "B",
        6 => "C",
        7 => "N",
        8 => "O",
        9 => "F",
        15 => "P",
        16 => "S",
        17 => "Cl",
        35 => "Br",
        53 => "I",
        _ => panic!("no symbol for {z}"),
    }
}

/// Allowed valences in increasing order, per the usual SMILES convention.
pub fn valences(z: u8) -> &'static [u32] {
    match z {
        5 => &[3],
        6 => &[4],
        7 | 15 => &[3, 5],
        8 => &[2],
        16 => &[2, 4, 6],
        9 | 17 | 35 | 53 => &[1],
        _ => &[],
    }
}

fn half_order(order: BondOrder) -> u32 {
    match order {
        BondOrder::Single => 2,
        BondOrder::Double => 4,
        BondOrder::Triple => 6,
        BondOrder::Aromatic => 3,
    }
}

fn bond_token(order: BondOrder) -> &'static str {
    match order {
        BondOrder::Single => "-",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic => ":",
    }
}

/// A connected-forest graph with atom and bond tokens, written as SMILES or
/// SMARTS text. `parent[i]` is the tree parent (always `< i`); extra edges
/// become ring closures.
struct GraphText<'a> {
    tokens: &'a [String],
    parent: &'a [Option<usize>],
    parent_bond: &'a [String],
    rings: &'a [(usize, usize, String)],
}

impl GraphText<'_> {
    fn write(&self) -> String {
        let n = self.tokens.len();
        let mut children = vec![Vec::new(); n];
        for (i, p) in self.parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(i);
            }
        }
        let mut preorder = vec![0; n];
        let mut counter = 0;
        let roots: Vec<usize> = (0..n).filter(|&i| self.parent[i].is_none()).collect();
        for &root in &roots {
            let mut stack = vec![root];
            while let Some(a) = stack.pop() {
                preorder[a] = counter;
                counter += 1;
                stack.extend(children[a].iter().rev());
            }
        }
        let mut closures: Vec<Vec<String>> = vec![Vec::new(); n];
        for (k, (a, b, token)) in self.rings.iter().enumerate() {
            let label = format!("%{}", 10 + k);
            let (first, second) = if preorder[*a] < preorder[*b] { (*a, *b) } else { (*b, *a) };
            closures[first].push(format!("{token}{label}"));
            closures[second].push(label);
        }
        let mut out = String::new();
        for (k, &root) in roots.iter().enumerate() {
            if k > 0 {
                out.push('.');
            }
            self.emit(root, &children, &closures, &mut out);
        }
        out
    }

    fn emit(&self, atom: usize, children: &[Vec<usize>], closures: &[Vec<String>], out: &mut String) {
        out.push_str(&self.tokens[atom]);
        for c in &closures[atom] {
            out.push_str(c);
        }
        let kids = &children[atom];
        for (k, &child) in kids.iter().enumerate() {
            let last = k + 1 == kids.len();
            if !last {
                out.push('(');
            }
            out.push_str(&self.parent_bond[child]);
            self.emit(child, children, closures, out);
            if !last {
                out.push(')');
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenAtom {
    pub z: u8,
    pub aromatic: bool,
    /// Bracketed atoms carry exactly this many hydrogens and this charge.
    pub bracket: Option<(u8, i8)>,
}

#[derive(Debug, Clone)]
pub struct GenBond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    /// Whether the bond symbol appears in the text.
    pub written: bool,
}

#[derive(Debug, Clone)]
pub struct GenMol {
    pub atoms: Vec<GenAtom>,
    pub parent: Vec<Option<usize>>,
    /// Bond to the parent, indexed by child atom.
    pub tree_bonds: Vec<Option<GenBond>>,
    pub ring_bonds: Vec<GenBond>,
}

#[derive(Debug, Clone, Copy)]
pub struct MolOptions {
    pub max_atoms: usize,
    pub aromatic_rate: f64,
    pub bracket_rate: f64,
    pub fragment_rate: f64,
    pub max_rings: usize,
}

impl Default for MolOptions {
    fn default() -> Self {
        MolOptions { max_atoms: 12, aromatic_rate: 0.2, bracket_rate: 0.15, fragment_rate: 0.08, max_rings: 2 }
    }
}

fn default_order(a: &GenAtom, b: &GenAtom) -> BondOrder {
    if a.aromatic && b.aromatic {
        BondOrder::Aromatic
    } else {
        BondOrder::Single
    }
}

fn random_order(rng: &mut StdRng) -> BondOrder {
    match rng.random_range(0..10) {
        0..=5 => BondOrder::Single,
        6 | 7 => BondOrder::Double,
        8 => BondOrder::Triple,
        _ => BondOrder::Aromatic,
    }
}

impl GenMol {
    pub fn random(rng: &mut StdRng, opts: &MolOptions) -> GenMol {
        let n = rng.random_range(1..=opts.max_atoms);
        let atoms: Vec<GenAtom> = (0..n)
            .map(|_| {
                let z = if rng.random_bool(0.5) { 6 } else { ORGANIC[rng.random_range(0..ORGANIC.len())] };
                let aromatic = AROMATIC_CAPABLE.contains(&z) && rng.random_bool(opts.aromatic_rate);
                let bracket =
                    rng.random_bool(opts.bracket_rate).then(|| (rng.random_range(0..=3), rng.random_range(-1..=1)));
                GenAtom { z, aromatic, bracket }
            })
            .collect();
        let mut parent = vec![None; n];
        let mut tree_bonds = vec![None; n];
        for i in 1..n {
            if rng.random_bool(opts.fragment_rate) {
                continue;
            }
            let p = rng.random_range(0..i);
            parent[i] = Some(p);
            tree_bonds[i] = Some(Self::random_bond(rng, &atoms, p, i));
        }
        let mut mol = GenMol { atoms, parent, tree_bonds, ring_bonds: Vec::new() };
        let rings = rng.random_range(0..=opts.max_rings);
        for _ in 0..rings * 3 {
            if mol.ring_bonds.len() == rings || n < 3 {
                break;
            }
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            if a == b || mol.bonded(a, b) || mol.root(a) != mol.root(b) {
                continue;
            }
            let bond = Self::random_bond(rng, &mol.atoms, a, b);
            mol.ring_bonds.push(bond);
        }
        mol
    }

    fn random_bond(rng: &mut StdRng, atoms: &[GenAtom], a: usize, b: usize) -> GenBond {
        let order = random_order(rng);
        let written = order != default_order(&atoms[a], &atoms[b]) || rng.random_bool(0.5);
        GenBond { a, b, order, written }
    }

    /// Acyclic, single-bonded, carbon-only chain or tree of `n` atoms.
    pub fn alkane(rng: &mut StdRng, n: usize) -> GenMol {
        let atoms = vec![GenAtom { z: 6, aromatic: false, bracket: None }; n];
        let mut parent = vec![None; n];
        let mut tree_bonds = vec![None; n];
        let mut degree = vec![0; n];
        for i in 1..n {
            let open: Vec<usize> = (0..i).filter(|&j| degree[j] < 4).collect();
            let p = open[rng.random_range(0..open.len())];
            degree[p] += 1;
            degree[i] += 1;
            parent[i] = Some(p);
            tree_bonds[i] = Some(GenBond { a: p, b: i, order: BondOrder::Single, written: rng.random_bool(0.2) });
        }
        GenMol { atoms, parent, tree_bonds, ring_bonds: Vec::new() }
    }

    fn root(&self, mut a: usize) -> usize {
        while let Some(p) = self.parent[a] {
            a = p;
        }
        a
    }

    pub fn bonds(&self) -> impl Iterator<Item = &GenBond> {
        self.tree_bonds.iter().flatten().chain(&self.ring_bonds)
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<BondOrder> {
        self.bonds().find(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a)).map(|x| x.order)
    }

    fn bonded(&self, a: usize, b: usize) -> bool {
        self.bond_between(a, b).is_some()
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.bonds().filter(|x| x.a == atom || x.b == atom).count()
    }

    pub fn charge(&self, atom: usize) -> i8 {
        self.atoms[atom].bracket.map_or(0, |(_, c)| c)
    }

    /// Hydrogens the valence rules assign to `atom`.
    pub fn hydrogens(&self, atom: usize) -> u32 {
        let a = &self.atoms[atom];
        if let Some((h, _)) = a.bracket {
            return h as u32;
        }
        let used: u32 =
            self.bonds().filter(|x| x.a == atom || x.b == atom).map(|x| half_order(x.order)).sum::<u32>() / 2;
        let allowed = valences(a.z);
        let allowed = if a.aromatic { &allowed[..1] } else { allowed };
        allowed.iter().find(|&&v| v >= used).map_or(0, |v| v - used)
    }

    pub fn total_hydrogens(&self) -> u32 {
        (0..self.atoms.len()).map(|i| self.hydrogens(i)).sum()
    }

    pub fn components(&self) -> usize {
        self.parent.iter().filter(|p| p.is_none()).count()
    }

    pub fn ring_count(&self) -> usize {
        self.ring_bonds.len()
    }

    pub fn smiles(&self) -> String {
        let tokens: Vec<String> = self
            .atoms
            .iter()
            .map(|a| {
                let sym = if a.aromatic { symbol(a.z).to_lowercase() } else { symbol(a.z).to_string() };
                match a.bracket {
                    None => sym,
                    Some((h, charge)) => {
                        let h = match h {
                            0 => String::new(),
                            1 => "H".to_string(),
                            n => format!("H{n}"),
                        };
                        let charge = match charge {
                            1 => "+",
                            -1 => "-",
                            _ => "",
                        };
                        format!("[{sym}{h}{charge}]")
                    }
                }
            })
            .collect();
        let token = |b: &GenBond| if b.written { bond_token(b.order).to_string() } else { String::new() };
        let parent_bond: Vec<String> =
            self.tree_bonds.iter().map(|b| b.as_ref().map(token).unwrap_or_default()).collect();
        let rings: Vec<(usize, usize, String)> = self.ring_bonds.iter().map(|b| (b.a, b.b, token(b))).collect();
        GraphText { tokens: &tokens, parent: &self.parent, parent_bond: &parent_bond, rings: &rings }.write()
    }
}

/// One alternative of a pattern atom; `None` fields are unconstrained.
#[derive(Debug, Clone, Copy)]
pub struct PatConj {
    pub z: Option<u8>,
    /// Ignored when `z` is `None`.
    pub aromatic: Option<bool>,
    pub h: Option<u8>,
    pub x: Option<u8>,
    pub charge: Option<i8>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PatBond {
    Order(BondOrder),
    SingleOrAromatic,
    Any,
}

impl PatBond {
    fn token(self) -> &'static str {
        match self {
            PatBond::Order(o) => bond_token(o),
            PatBond::SingleOrAromatic => "",
            PatBond::Any => "~",
        }
    }

    fn accepts(self, order: BondOrder) -> bool {
        match self {
            PatBond::Order(o) => o == order,
            PatBond::SingleOrAromatic => matches!(order, BondOrder::Single | BondOrder::Aromatic),
            PatBond::Any => true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenPattern {
    pub atoms: Vec<Vec<PatConj>>,
    pub parent: Vec<Option<usize>>,
    pub parent_bond: Vec<Option<PatBond>>,
    pub ring_bonds: Vec<(usize, usize, PatBond)>,
}

fn conj_text(c: &PatConj, in_list: bool) -> String {
    let mut s = match (c.z, c.aromatic) {
        (None, _) => "*".to_string(),
        (Some(z), Some(true)) => symbol(z).to_lowercase(),
        (Some(z), Some(false)) => symbol(z).to_string(),
        (Some(z), None) => {
            assert!(in_list, "either-aromaticity needs a list");
            symbol(z).to_string()
        }
    };
    if let Some(h) = c.h {
        s.push_str(&format!("H{h}"));
    }
    if let Some(x) = c.x {
        s.push_str(&format!("X{x}"));
    }
    match c.charge {
        Some(1) => s.push('+'),
        Some(-1) => s.push('-'),
        Some(0) => s.push_str("+0"),
        Some(n) => s.push_str(&format!("{n:+}")),
        None => {}
    }
    s
}

impl GenPattern {
    pub fn smarts(&self) -> String {
        let tokens: Vec<String> = self
            .atoms
            .iter()
            .map(|alts| {
                let c = &alts[0];
                let plain = alts.len() == 1 && c.h.is_none() && c.x.is_none() && c.charge.is_none();
                match (plain, c.z, c.aromatic) {
                    (true, None, _) => "*".to_string(),
                    (true, Some(_), Some(_)) => conj_text(c, false),
                    _ => {
                        let list = alts.len() > 1;
                        let parts: Vec<String> = alts.iter().map(|c| conj_text(c, list)).collect();
                        format!("[{}]", parts.join(","))
                    }
                }
            })
            .collect();
        let parent_bond: Vec<String> =
            self.parent_bond.iter().map(|b| b.map(|b| b.token().to_string()).unwrap_or_default()).collect();
        let rings: Vec<(usize, usize, String)> =
            self.ring_bonds.iter().map(|&(a, b, p)| (a, b, p.token().to_string())).collect();
        GraphText { tokens: &tokens, parent: &self.parent, parent_bond: &parent_bond, rings: &rings }.write()
    }

    fn bonds(&self) -> Vec<(usize, usize, PatBond)> {
        let mut out: Vec<(usize, usize, PatBond)> =
            (0..self.atoms.len()).filter_map(|i| Some((self.parent[i]?, i, self.parent_bond[i]?))).collect();
        out.extend(self.ring_bonds.iter().copied());
        out
    }

    fn atom_accepts(&self, p: usize, mol: &GenMol, m: usize) -> bool {
        let atom = &mol.atoms[m];
        self.atoms[p].iter().any(|c| {
            let h = mol.hydrogens(m);
            c.z.is_none_or(|z| z == atom.z && c.aromatic.is_none_or(|ar| ar == atom.aromatic))
                && c.h.is_none_or(|want| want as u32 == h)
                && c.x.is_none_or(|want| want as u32 == mol.degree(m) as u32 + h)
                && c.charge.is_none_or(|want| want == mol.charge(m))
        })
    }

    /// Distinct atom sets over all injective maps that respect every atom
    /// and bond constraint, by exhaustive search.
    pub fn brute_force_count(&self, mol: &GenMol) -> usize {
        let bonds = self.bonds();
        let mut sets = BTreeSet::new();
        let mut image = Vec::new();
        self.enumerate(mol, &bonds, &mut image, &mut sets);
        sets.len()
    }

    fn enumerate(
        &self,
        mol: &GenMol,
        bonds: &[(usize, usize, PatBond)],
        image: &mut Vec<usize>,
        sets: &mut BTreeSet<Vec<usize>>,
    ) {
        let p = image.len();
        if p == self.atoms.len() {
            let mut set = image.clone();
            set.sort_unstable();
            sets.insert(set);
            return;
        }
        for m in 0..mol.atoms.len() {
            if image.contains(&m) || !self.atom_accepts(p, mol, m) {
                continue;
            }
            image.push(m);
            let consistent = bonds
                .iter()
                .filter(|(a, b, _)| *a.max(b) == p)
                .all(|&(a, b, pred)| mol.bond_between(image[a], image[b]).is_some_and(|o| pred.accepts(o)));
            if consistent {
                self.enumerate(mol, bonds, image, sets);
            }
            image.pop();
        }
    }

    /// A pattern shaped like a connected piece of `mol`, with constraints
    /// randomly loosened or occasionally falsified.
    pub fn from_molecule(rng: &mut StdRng, mol: &GenMol, max_atoms: usize) -> GenPattern {
        let n = mol.atoms.len();
        let start = rng.random_range(0..n);
        let want = rng.random_range(1..=max_atoms);
        let mut chosen = vec![start];
        let mut parent = vec![None];
        let mut parent_bond = vec![None];
        let mut guard = 0;
        while chosen.len() < want && guard < 200 {
            guard += 1;
            let from = rng.random_range(0..chosen.len());
            let a = chosen[from];
            let neighbors: Vec<usize> =
                (0..n).filter(|&b| mol.bond_between(a, b).is_some() && !chosen.contains(&b)).collect();
            if neighbors.is_empty() {
                continue;
            }
            let b = neighbors[rng.random_range(0..neighbors.len())];
            chosen.push(b);
            parent.push(Some(from));
            parent_bond.push(Some(Self::loosen_bond(rng, mol.bond_between(a, b).unwrap())));
        }
        let mut ring_bonds = Vec::new();
        for i in 0..chosen.len() {
            for j in i + 1..chosen.len() {
                let is_tree = parent[j] == Some(i) || parent[i] == Some(j);
                if let (false, Some(order)) = (is_tree, mol.bond_between(chosen[i], chosen[j])) {
                    if rng.random_bool(0.6) {
                        ring_bonds.push((i, j, Self::loosen_bond(rng, order)));
                    }
                }
            }
        }
        let atoms = chosen.iter().map(|&m| Self::loosen_atom(rng, mol, m)).collect();
        GenPattern { atoms, parent, parent_bond, ring_bonds }
    }

    fn loosen_bond(rng: &mut StdRng, order: BondOrder) -> PatBond {
        match rng.random_range(0..10) {
            0..=4 => PatBond::Order(order),
            5 | 6 => PatBond::Any,
            7 | 8 => PatBond::SingleOrAromatic,
            _ => PatBond::Order(random_order(rng)),
        }
    }

    fn loosen_atom(rng: &mut StdRng, mol: &GenMol, m: usize) -> Vec<PatConj> {
        let atom = &mol.atoms[m];
        let h = mol.hydrogens(m);
        let mut conj = PatConj { z: Some(atom.z), aromatic: Some(atom.aromatic), h: None, x: None, charge: None };
        match rng.random_range(0..10) {
            0 => conj.z = None,
            1 => conj.h = Some(h.min(15) as u8),
            2 => conj.x = Some(((mol.degree(m) as u32 + h).min(15)) as u8),
            3 => conj.charge = Some(mol.charge(m)),
            4 => conj.h = Some(rng.random_range(0..=3)),
            5 => conj.aromatic = Some(!atom.aromatic),
            _ => {}
        }
        if conj.aromatic == Some(true) && conj.z.is_some_and(|z| !AROMATIC_CAPABLE.contains(&z)) {
            conj.aromatic = Some(false);
        }
        if rng.random_bool(0.15) {
            let other = ORGANIC[rng.random_range(0..ORGANIC.len())];
            let either = |z| PatConj { z: Some(z), aromatic: None, h: None, x: None, charge: None };
            let mut first = conj;
            if first.aromatic == Some(false) {
                first.aromatic = None;
            }
            return vec![first, either(other)];
        }
        vec![conj]
    }

    /// An unconstrained random pattern tree with a possible ring bond.
    pub fn random(rng: &mut StdRng, max_atoms: usize) -> GenPattern {
        let n = rng.random_range(1..=max_atoms);
        let atoms = (0..n)
            .map(|_| {
                let z = if rng.random_bool(0.15) { None } else { Some(ORGANIC[rng.random_range(0..ORGANIC.len())]) };
                let aromatic = z.map(|z| AROMATIC_CAPABLE.contains(&z) && rng.random_bool(0.2));
                let h = rng.random_bool(0.2).then(|| rng.random_range(0..=3));
                vec![PatConj { z, aromatic, h, x: None, charge: None }]
            })
            .collect();
        let mut parent = vec![None; n];
        let mut parent_bond = vec![None; n];
        for i in 1..n {
            parent[i] = Some(rng.random_range(0..i));
            parent_bond[i] = Some(match rng.random_range(0..6) {
                0 => PatBond::Any,
                1 => PatBond::Order(BondOrder::Double),
                2 => PatBond::Order(BondOrder::Single),
                _ => PatBond::SingleOrAromatic,
            });
        }
        let mut ring_bonds = Vec::new();
        if n >= 3 && rng.random_bool(0.2) {
            let a = n - 1;
            let b = rng.random_range(0..n - 1);
            if parent[a] != Some(b) {
                ring_bonds.push((b, a, PatBond::SingleOrAromatic));
            }
        }
        GenPattern { atoms, parent, parent_bond, ring_bonds }
    }
}
