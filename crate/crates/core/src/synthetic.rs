//! Deterministic synthetic ontologies with known class membership, for demos,
//! end-to-end tests and benchmarks.
//!
//! Structures are carbon chains decorated with functional groups. Class
//! membership follows from which groups were attached, and every class comes
//! with a reference program that recognises exactly its members.

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::benchmark::OntologyEntry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Group {
    Hydroxyl,
    Carboxyl,
    Amine,
    Chloro,
    Bromo,
    Phenyl,
    Nitrile,
    Cyclohexyl,
    Methoxy,
    Thiol,
    Methyl,
}

impl Group {
    const ALL: [Group; 11] = [
        Group::Hydroxyl,
        Group::Carboxyl,
        Group::Amine,
        Group::Chloro,
        Group::Bromo,
        Group::Phenyl,
        Group::Nitrile,
        Group::Cyclohexyl,
        Group::Methoxy,
        Group::Thiol,
        Group::Methyl,
    ];

    fn smiles(self) -> &'static str {
        match self {
            Group::Hydroxyl => "O",
            Group::Carboxyl => "C(=O)O",
            Group::Amine => "N",
            Group::Chloro => "Cl",
            Group::Bromo => "Br",
            Group::Phenyl => "c1ccccc1",
            Group::Nitrile => "C#N",
            Group::Cyclohexyl => "C1CCCCC1",
            Group::Methoxy => "OC",
            Group::Thiol => "S",
            Group::Methyl => "C",
        }
    }

    fn is_hydrocarbon(self) -> bool {
        matches!(self, Group::Phenyl | Group::Cyclohexyl | Group::Methyl)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Design {
    alkene: bool,
    groups: Vec<Group>,
}

impl Design {
    fn count(&self, g: Group) -> usize {
        self.groups.iter().filter(|&&x| x == g).count()
    }

    fn has(&self, g: Group) -> bool {
        self.count(g) > 0
    }

    /// A saturated chain with at most two groups per carbon, optionally
    /// capped by a vinyl group.
    fn smiles(&self, rng: &mut StdRng) -> String {
        let chain = rng.random_range(self.groups.len().div_ceil(2).max(2)..=8);
        let mut slots: Vec<Vec<Group>> = vec![Vec::new(); chain];
        for &g in &self.groups {
            loop {
                let j = rng.random_range(0..chain);
                if slots[j].len() < 2 {
                    slots[j].push(g);
                    break;
                }
            }
        }
        let mut out = String::new();
        if self.alkene {
            out.push_str("C=C");
        }
        for slot in slots {
            out.push('C');
            for g in slot {
                out.push('(');
                out.push_str(g.smiles());
                out.push(')');
            }
        }
        out
    }
}

struct ClassSpec {
    id: &'static str,
    name: &'static str,
    definition: &'static str,
    parents: &'static [&'static str],
    condition: &'static str,
    accept: &'static str,
    reject: &'static str,
    member: fn(&Design) -> bool,
    seed: fn(&mut StdRng) -> Design,
}

const ROOT_ID: &str = "SYN:0000000";

fn with(groups: &[Group]) -> Design {
    Design { alkene: false, groups: groups.to_vec() }
}

const CLASSES: [ClassSpec; 12] = [
    ClassSpec {
        id: "SYN:0000001",
        name: "carboxylic acid",
        definition: "A compound carrying at least one carboxy group.",
        parents: &[ROOT_ID],
        condition: r#"MATCH("[CX3](=O)[OX2H1]")"#,
        accept: "Contains a carboxy group",
        reject: "No carboxy group found",
        member: |d| d.has(Group::Carboxyl),
        seed: |_| with(&[Group::Carboxyl]),
    },
    ClassSpec {
        id: "SYN:0000002",
        name: "dicarboxylic acid",
        definition: "A carboxylic acid carrying exactly two carboxy groups.",
        parents: &["SYN:0000001"],
        condition: r#"COUNT("[CX3](=O)[OX2H1]") = 2"#,
        accept: "Contains exactly two carboxy groups",
        reject: "Does not contain exactly two carboxy groups",
        member: |d| d.count(Group::Carboxyl) == 2,
        seed: |_| with(&[Group::Carboxyl, Group::Carboxyl]),
    },
    ClassSpec {
        id: "SYN:0000003",
        name: "alcohol",
        definition: "A compound with a hydroxy group on a saturated carbon.",
        parents: &[ROOT_ID],
        condition: r#"MATCH("[CX4][OX2H1]")"#,
        accept: "Hydroxy group on a saturated carbon",
        reject: "No alcoholic hydroxy group",
        member: |d| d.has(Group::Hydroxyl),
        seed: |_| with(&[Group::Hydroxyl]),
    },
    ClassSpec {
        id: "SYN:0000004",
        name: "primary amine",
        definition: "A compound with an amino group on a saturated carbon.",
        parents: &[ROOT_ID],
        condition: r#"MATCH("[CX4][NH2]")"#,
        accept: "Contains a primary amino group",
        reject: "No primary amino group",
        member: |d| d.has(Group::Amine),
        seed: |_| with(&[Group::Amine]),
    },
    ClassSpec {
        id: "SYN:0000005",
        name: "organohalogen compound",
        definition: "A compound containing a carbon-halogen bond.",
        parents: &[ROOT_ID],
        condition: "ATOMS(Cl) + ATOMS(Br) > 0",
        accept: "Contains chlorine or bromine",
        reject: "No halogen atoms",
        member: |d| d.has(Group::Chloro) || d.has(Group::Bromo),
        seed: |rng| with(&[if rng.random_bool(0.5) { Group::Chloro } else { Group::Bromo }]),
    },
    ClassSpec {
        id: "SYN:0000006",
        name: "organochlorine compound",
        definition: "A compound containing a carbon-chlorine bond.",
        parents: &["SYN:0000005"],
        condition: "ATOMS(Cl) > 0",
        accept: "Contains chlorine",
        reject: "No chlorine atoms",
        member: |d| d.has(Group::Chloro),
        seed: |_| with(&[Group::Chloro]),
    },
    ClassSpec {
        id: "SYN:0000007",
        name: "organobromine compound",
        definition: "A compound containing a carbon-bromine bond.",
        parents: &["SYN:0000005"],
        condition: "ATOMS(Br) > 0",
        accept: "Contains bromine",
        reject: "No bromine atoms",
        member: |d| d.has(Group::Bromo),
        seed: |_| with(&[Group::Bromo]),
    },
    ClassSpec {
        id: "SYN:0000008",
        name: "benzenes",
        definition: "A compound containing a benzene ring.",
        parents: &[ROOT_ID],
        condition: r#"MATCH("c1ccccc1")"#,
        accept: "Contains a benzene ring",
        reject: "No benzene ring",
        member: |d| d.has(Group::Phenyl),
        seed: |_| with(&[Group::Phenyl]),
    },
    ClassSpec {
        id: "SYN:0000009",
        name: "nitrile",
        definition: "A compound containing a carbon-nitrogen triple bond.",
        parents: &[ROOT_ID],
        condition: r#"MATCH("C#N")"#,
        accept: "Contains a cyano group",
        reject: "No cyano group",
        member: |d| d.has(Group::Nitrile),
        seed: |_| with(&[Group::Nitrile]),
    },
    ClassSpec {
        id: "SYN:0000010",
        name: "olefinic compound",
        definition: "A compound containing a carbon-carbon double bond.",
        parents: &[ROOT_ID],
        condition: r#"MATCH("C=C")"#,
        accept: "Contains a carbon-carbon double bond",
        reject: "No carbon-carbon double bond",
        member: |d| d.alkene,
        seed: |_| Design { alkene: true, groups: Vec::new() },
    },
    ClassSpec {
        id: "SYN:0000011",
        name: "cyclohexanes",
        definition: "A compound containing a saturated six-membered carbocycle.",
        parents: &[ROOT_ID],
        condition: r#"MATCH("C1CCCCC1")"#,
        accept: "Contains a cyclohexane ring",
        reject: "No cyclohexane ring",
        member: |d| d.has(Group::Cyclohexyl),
        seed: |_| with(&[Group::Cyclohexyl]),
    },
    ClassSpec {
        id: "SYN:0000012",
        name: "hydrocarbon",
        definition: "A compound consisting of carbon and hydrogen only.",
        parents: &[ROOT_ID],
        condition: "ELEMENTS SUBSET_OF {C, H}",
        accept: "Only carbon and hydrogen present",
        reject: "Contains heteroatoms",
        member: |d| d.groups.iter().all(|g| g.is_hydrocarbon()),
        seed: |_| with(&[]),
    },
];

/// A generated ontology plus a reference program for each of its classes.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticOntology {
    /// Classes (including an undefined root that the definition filter
    /// removes), then structures, then one wildcard entry that is discarded.
    pub entries: Vec<OntologyEntry>,
    /// Class id to the text of a program that accepts exactly its members.
    pub programs: BTreeMap<String, String>,
}

impl SyntheticOntology {
    /// Ids of the twelve learnable classes.
    pub fn class_ids(&self) -> Vec<String> {
        self.programs.keys().cloned().collect()
    }
}

fn program_text(spec: &ClassSpec) -> String {
    format!(
        "CLASS {} \"{}\"\nDEFINITION \"{}\"\nRULE ACCEPT IF {} REASON \"{}\"\nDEFAULT REJECT REASON \"{}\"\n",
        spec.id, spec.name, spec.definition, spec.condition, spec.accept, spec.reject
    )
}

/// Builds `structures` distinct structures. Structure `i` is seeded with the
/// defining feature of class `i mod 12` plus up to two random extras, so
/// every class gets at least `structures / 12` members.
pub fn synthetic_ontology(structures: usize, seed: u64) -> SyntheticOntology {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut entries = vec![OntologyEntry {
        id: ROOT_ID.to_string(),
        name: "synthetic chemical entity".to_string(),
        definition: None,
        smiles: None,
        is_a: Vec::new(),
    }];
    for spec in &CLASSES {
        entries.push(OntologyEntry {
            id: spec.id.to_string(),
            name: spec.name.to_string(),
            definition: Some(spec.definition.to_string()),
            smiles: None,
            is_a: spec.parents.iter().map(|p| p.to_string()).collect(),
        });
    }
    let mut seen = BTreeSet::new();
    let mut made = 0;
    let mut tries = 0;
    while made < structures && tries < structures * 50 {
        let spec = &CLASSES[tries % CLASSES.len()];
        tries += 1;
        let mut design = (spec.seed)(&mut rng);
        for _ in 0..rng.random_range(0..=2) {
            let g = Group::ALL[rng.random_range(0..Group::ALL.len())];
            let keeps_seed = match spec.id {
                "SYN:0000002" => g != Group::Carboxyl,
                "SYN:0000012" => g.is_hydrocarbon(),
                _ => true,
            };
            if keeps_seed {
                design.groups.push(g);
            }
        }
        design.alkene |= rng.random_bool(0.15);
        design.groups.sort();
        let smiles = design.smiles(&mut rng);
        if !seen.insert(smiles.clone()) {
            continue;
        }
        made += 1;
        let is_a: Vec<String> = CLASSES.iter().filter(|c| (c.member)(&design)).map(|c| c.id.to_string()).collect();
        entries.push(OntologyEntry {
            id: format!("SYNS:{made:06}"),
            name: format!("synthetic structure {made}"),
            definition: None,
            smiles: Some(smiles),
            is_a: if is_a.is_empty() { vec![ROOT_ID.to_string()] } else { is_a },
        });
    }
    entries.push(OntologyEntry {
        id: "SYN:9999999".to_string(),
        name: "carboxylic acid residue".to_string(),
        definition: Some("A generalized structure with an open attachment point.".to_string()),
        smiles: Some("*C(=O)O".to_string()),
        is_a: vec!["SYN:0000001".to_string()],
    });
    let programs = CLASSES.iter().map(|c| (c.id.to_string(), program_text(c))).collect();
    SyntheticOntology { entries, programs }
}

/// Entries as JSON lines, the format `load_ontology` reads.
pub fn to_json_lines(entries: &[OntologyEntry]) -> String {
    entries.iter().map(|e| serde_json::to_string(e).expect("serializable entry") + "\n").collect()
}
