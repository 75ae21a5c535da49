//! Builds the structures/classes benchmark from a line-delimited ontology
//! dump: partition entries, compute class membership through the is-a
//! closure, filter classes and split structures into train and validation.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::molgraph::parse_smiles;
use crate::program::{Action, ClassifierProgram, DefaultVerdict, Expr, Predicate, Rule};
use crate::smarts::parse_smarts;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyEntry {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub definition: Option<String>,
    #[serde(default)]
    pub smiles: Option<String>,
    #[serde(default)]
    pub is_a: Vec<String>,
}

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("is_a cycle: {}", .path.join(" -> "))]
    Cycle { path: Vec<String> },
    #[error("no structures to split")]
    NoStructures,
}

fn io_error(path: &Path, source: std::io::Error) -> BenchmarkError {
    BenchmarkError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedOntology {
    pub entries: Vec<OntologyEntry>,
    /// `(child, parent)` pairs whose parent id is not in the file.
    pub dangling: Vec<(String, String)>,
}

pub fn load_ontology(path: &Path) -> Result<LoadedOntology, BenchmarkError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_ontology(&text)
}

/// Parses ontology records, one JSON object per non-blank line.
pub fn parse_ontology(text: &str) -> Result<LoadedOntology, BenchmarkError> {
    let mut entries = Vec::new();
    let mut seen = HashMap::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: OntologyEntry = serde_json::from_str(line)
            .map_err(|e| BenchmarkError::Malformed { line: index + 1, message: e.to_string() })?;
        if entry.id.trim().is_empty() {
            return Err(BenchmarkError::Malformed { line: index + 1, message: "empty id".into() });
        }
        if seen.insert(entry.id.clone(), index + 1).is_some() {
            return Err(BenchmarkError::DuplicateId { line: index + 1, id: entry.id });
        }
        entries.push(entry);
    }
    let mut dangling = Vec::new();
    for entry in &entries {
        for parent in &entry.is_a {
            if !seen.contains_key(parent) {
                log::warn!("{} is_a unknown entry {}", entry.id, parent);
                dangling.push((entry.id.clone(), parent.clone()));
            }
        }
    }
    check_acyclic(&entries)?;
    Ok(LoadedOntology { entries, dangling })
}

fn check_acyclic(entries: &[OntologyEntry]) -> Result<(), BenchmarkError> {
    let index: HashMap<&str, usize> = entries.iter().enumerate().map(|(i, e)| (e.id.as_str(), i)).collect();
    // 0 = unvisited, 1 = on the current path, 2 = finished.
    let mut state = vec![0u8; entries.len()];
    for root in 0..entries.len() {
        if state[root] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        state[root] = 1;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            let parents = &entries[node].is_a;
            if *next < parents.len() {
                let parent = &parents[*next];
                *next += 1;
                let Some(&p) = index.get(parent.as_str()) else { continue };
                match state[p] {
                    0 => {
                        state[p] = 1;
                        stack.push((p, 0));
                    }
                    1 => {
                        let start = stack.iter().position(|&(n, _)| n == p).expect("on path");
                        let mut path: Vec<String> =
                            stack[start..].iter().map(|&(n, _)| entries[n].id.clone()).collect();
                        path.push(entries[p].id.clone());
                        return Err(BenchmarkError::Cycle { path });
                    }
                    _ => {}
                }
            } else {
                state[node] = 2;
                stack.pop();
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Partition {
    pub structures: Vec<OntologyEntry>,
    pub classes: Vec<OntologyEntry>,
    pub discarded: Vec<OntologyEntry>,
}

fn is_structure_smiles(smiles: Option<&str>) -> bool {
    smiles.is_some_and(|s| !s.trim().is_empty() && !s.contains('*'))
}

/// Ancestor ids of `id` (excluding itself) following is-a links.
fn ancestors<'a>(id: &'a str, parents: &HashMap<&'a str, &'a [String]>) -> BTreeSet<&'a str> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([id]);
    while let Some(node) = queue.pop_front() {
        for parent in parents.get(node).copied().unwrap_or_default() {
            if seen.insert(parent.as_str()) {
                queue.push_back(parent.as_str());
            }
        }
    }
    seen
}

/// Splits entries into structures (SMILES without wildcards and no is-a
/// children), classes (ancestors of at least one structure) and the rest.
pub fn partition_entries(entries: &[OntologyEntry]) -> Partition {
    let has_children: BTreeSet<&str> = entries.iter().flat_map(|e| e.is_a.iter().map(String::as_str)).collect();
    let is_structure =
        |e: &OntologyEntry| is_structure_smiles(e.smiles.as_deref()) && !has_children.contains(e.id.as_str());
    let parents: HashMap<&str, &[String]> = entries.iter().map(|e| (e.id.as_str(), e.is_a.as_slice())).collect();
    let mut structure_ancestors = BTreeSet::new();
    for entry in entries.iter().filter(|e| is_structure(e)) {
        structure_ancestors.extend(ancestors(&entry.id, &parents));
    }
    let mut partition = Partition::default();
    for entry in entries {
        if is_structure(entry) {
            partition.structures.push(entry.clone());
        } else if structure_ancestors.contains(entry.id.as_str()) {
            partition.classes.push(entry.clone());
        } else {
            partition.discarded.push(entry.clone());
        }
    }
    partition
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassFilters {
    pub min_members: usize,
    pub max_members: usize,
    pub require_definition: bool,
}

impl Default for ClassFilters {
    fn default() -> Self {
        ClassFilters { min_members: 25, max_members: 5000, require_definition: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDataset {
    pub class_id: String,
    pub name: String,
    pub definition: Option<String>,
    /// Structural formula attached to the class, if any. Not used for
    /// learning; only the naive single-pattern baseline reads it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_smiles: Option<String>,
    pub positive_ids: BTreeSet<String>,
}

/// Member structures of every class via the is-a closure, then filtered.
pub fn build_class_datasets(partition: &Partition, filters: &ClassFilters) -> BTreeMap<String, ClassDataset> {
    let all: Vec<&OntologyEntry> = partition.structures.iter().chain(&partition.classes).collect();
    let parents: HashMap<&str, &[String]> = all.iter().map(|e| (e.id.as_str(), e.is_a.as_slice())).collect();
    let mut members: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for structure in &partition.structures {
        for ancestor in ancestors(&structure.id, &parents) {
            members.entry(ancestor).or_default().insert(structure.id.clone());
        }
    }
    let mut out = BTreeMap::new();
    for class in &partition.classes {
        let positives = members.remove(class.id.as_str()).unwrap_or_default();
        let n = positives.len();
        if n < filters.min_members || n > filters.max_members {
            continue;
        }
        let definition = class.definition.clone().filter(|d| !d.trim().is_empty());
        if filters.require_definition && definition.is_none() {
            continue;
        }
        out.insert(
            class.id.clone(),
            ClassDataset {
                class_id: class.id.clone(),
                name: class.name.clone(),
                definition,
                class_smiles: class.smiles.clone().filter(|s| !s.trim().is_empty()),
                positive_ids: positives,
            },
        );
    }
    out
}

fn split_key(seed: u64, id: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(id.as_bytes());
    hasher.finalize().into()
}

/// Deterministic partition: ids are ordered by a seeded SHA-256 of the id and
/// the first `floor(train_fraction * n)` become training ids. Both halves are
/// returned sorted by id.
pub fn split_structures<S: AsRef<str>>(ids: &[S], seed: u64, train_fraction: f64) -> (Vec<String>, Vec<String>) {
    let mut keyed: Vec<([u8; 32], &str)> = ids.iter().map(|id| (split_key(seed, id.as_ref()), id.as_ref())).collect();
    keyed.sort_unstable();
    let fraction = train_fraction.clamp(0.0, 1.0);
    let n_train = ((keyed.len() as f64) * fraction).floor() as usize;
    let mut train: Vec<String> = keyed[..n_train].iter().map(|(_, id)| id.to_string()).collect();
    let mut validation: Vec<String> = keyed[n_train..].iter().map(|(_, id)| id.to_string()).collect();
    train.sort();
    validation.sort();
    (train, validation)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureRecord {
    pub id: String,
    pub name: String,
    pub smiles: String,
    /// False when the SMILES does not parse; such structures stay in the
    /// benchmark and every program classifies them as non-members.
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub train_fraction: f64,
    pub validation_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub structures: BTreeMap<String, StructureRecord>,
    pub classes: BTreeMap<String, ClassDataset>,
    pub split: SplitManifest,
}

impl Benchmark {
    pub fn is_validation(&self, structure_id: &str) -> bool {
        self.split.validation_ids.contains(structure_id)
    }

    pub fn train_ids(&self) -> impl Iterator<Item = &str> {
        self.structures.keys().map(String::as_str).filter(|id| !self.is_validation(id))
    }

    pub fn validation_ids(&self) -> impl Iterator<Item = &str> {
        self.split.validation_ids.iter().map(String::as_str)
    }

    /// `(positives, negatives)` among training structures, each sorted by id.
    pub fn train_examples(&self, class_id: &str) -> Option<(Vec<&StructureRecord>, Vec<&StructureRecord>)> {
        self.examples(class_id, false)
    }

    /// `(positives, negatives)` among validation structures, each sorted by id.
    pub fn validation_examples(&self, class_id: &str) -> Option<(Vec<&StructureRecord>, Vec<&StructureRecord>)> {
        self.examples(class_id, true)
    }

    fn examples(&self, class_id: &str, validation: bool) -> Option<(Vec<&StructureRecord>, Vec<&StructureRecord>)> {
        let class = self.classes.get(class_id)?;
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for (id, record) in &self.structures {
            if self.is_validation(id) != validation {
                continue;
            }
            if class.positive_ids.contains(id) {
                pos.push(record);
            } else {
                neg.push(record);
            }
        }
        Some((pos, neg))
    }

    /// Keeps only the listed classes (unknown ids are ignored and logged).
    pub fn restrict_classes(&mut self, ids: &[String]) {
        let keep: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
        for id in &keep {
            if !self.classes.contains_key(*id) {
                log::warn!("class {id} from the id list is not in the benchmark");
            }
        }
        self.classes.retain(|id, _| keep.contains(id.as_str()));
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub filters: ClassFilters,
    pub seed: u64,
    pub train_fraction: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { filters: ClassFilters::default(), seed: 42, train_fraction: 0.8 }
    }
}

pub fn build_benchmark(entries: &[OntologyEntry], options: &BuildOptions) -> Result<Benchmark, BenchmarkError> {
    let partition = partition_entries(entries);
    if partition.structures.is_empty() {
        return Err(BenchmarkError::NoStructures);
    }
    let classes = build_class_datasets(&partition, &options.filters);
    let structures: BTreeMap<String, StructureRecord> = partition
        .structures
        .iter()
        .map(|e| {
            let smiles = e.smiles.clone().unwrap_or_default();
            let valid = parse_smiles(&smiles).is_ok();
            if !valid {
                log::warn!("structure {} has an unparseable SMILES", e.id);
            }
            (e.id.clone(), StructureRecord { id: e.id.clone(), name: e.name.clone(), smiles, valid })
        })
        .collect();
    let ids: Vec<&str> = structures.keys().map(String::as_str).collect();
    let (_, validation) = split_structures(&ids, options.seed, options.train_fraction);
    Ok(Benchmark {
        structures,
        classes,
        split: SplitManifest {
            seed: options.seed,
            train_fraction: options.train_fraction,
            validation_ids: validation.into_iter().collect(),
        },
    })
}

pub const CLASSES_FILE: &str = "classes.jsonl";
pub const STRUCTURES_FILE: &str = "structures.jsonl";
pub const SPLIT_FILE: &str = "split.json";

fn write_jsonl<T: Serialize>(path: &Path, rows: impl Iterator<Item = T>) -> Result<(), BenchmarkError> {
    let mut buf = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut buf, &row).expect("serializable row");
        buf.push(b'\n');
    }
    fs::write(path, buf).map_err(|e| io_error(path, e))
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, BenchmarkError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| BenchmarkError::Malformed { line: i + 1, message: format!("{}: {e}", path.display()) })
        })
        .collect()
}

/// Writes the benchmark as three files. Output is byte-stable for equal input.
pub fn write_benchmark(benchmark: &Benchmark, dir: &Path) -> Result<(), BenchmarkError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    write_jsonl(&dir.join(CLASSES_FILE), benchmark.classes.values())?;
    write_jsonl(&dir.join(STRUCTURES_FILE), benchmark.structures.values())?;
    let split_path = dir.join(SPLIT_FILE);
    let mut file = fs::File::create(&split_path).map_err(|e| io_error(&split_path, e))?;
    serde_json::to_writer_pretty(&mut file, &benchmark.split).expect("serializable split");
    file.write_all(b"\n").map_err(|e| io_error(&split_path, e))
}

pub fn read_benchmark(dir: &Path) -> Result<Benchmark, BenchmarkError> {
    let classes: Vec<ClassDataset> = read_jsonl(&dir.join(CLASSES_FILE))?;
    let structures: Vec<StructureRecord> = read_jsonl(&dir.join(STRUCTURES_FILE))?;
    let split_path = dir.join(SPLIT_FILE);
    let split_text = fs::read_to_string(&split_path).map_err(|e| io_error(&split_path, e))?;
    let split: SplitManifest = serde_json::from_str(&split_text)
        .map_err(|e| BenchmarkError::Malformed { line: e.line(), message: format!("{}: {e}", split_path.display()) })?;
    Ok(Benchmark {
        structures: structures.into_iter().map(|s| (s.id.clone(), s)).collect(),
        classes: classes.into_iter().map(|c| (c.class_id.clone(), c)).collect(),
        split,
    })
}

/// Reads a class id list: one id per line, blank lines and `#` comments
/// ignored.
pub fn read_id_list(path: &Path) -> Result<Vec<String>, BenchmarkError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

/// Baseline classifier that treats the class's own generalized SMILES as a
/// single substructure pattern. `None` when the class has no usable pattern.
pub fn naive_smarts_program(class: &ClassDataset) -> Option<ClassifierProgram> {
    let smiles = class.class_smiles.as_deref()?;
    // R-group labels such as [1*] or [*:2] reduce to plain wildcards.
    let mut text = String::with_capacity(smiles.len());
    let mut rest = smiles;
    while let Some(start) = rest.find('[') {
        text.push_str(&rest[..start]);
        let Some(len) = rest[start..].find(']') else {
            text.push_str(&rest[start..]);
            rest = "";
            break;
        };
        let inner = &rest[start + 1..start + len];
        let is_r_group = inner.contains('*') && inner.chars().all(|c| c.is_ascii_digit() || c == '*' || c == ':');
        if is_r_group {
            text.push('*');
        } else {
            text.push_str(&rest[start..=start + len]);
        }
        rest = &rest[start + len + 1..];
    }
    text.push_str(rest);
    let pattern = parse_smarts(&text).ok()?;
    Some(ClassifierProgram {
        class_id: class.class_id.clone(),
        class_name: class.name.clone(),
        definition: None,
        rules: vec![Rule {
            action: Action::Accept,
            condition: Expr::Leaf(Predicate::Match(pattern)),
            reason: "Matches the class structural pattern".to_string(),
        }],
        default: DefaultVerdict {
            action: Action::Reject,
            reason: "Does not match the class structural pattern".to_string(),
        },
        attempt_history: Vec::new(),
    })
}
