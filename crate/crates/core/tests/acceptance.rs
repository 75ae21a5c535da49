//! Acceptance suite: one numbered criterion per check, each printed as a
//! PASS or FAIL line. Exits non-zero if any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use chemprog_core::benchmark::{
    build_benchmark, build_class_datasets, partition_entries, write_benchmark, BuildOptions, ClassDataset,
    ClassFilters, OntologyEntry, StructureRecord,
};
use chemprog_core::elements::HYDROGEN;
use chemprog_core::enrich::{bh_adjust, enrich_samples, fisher_exact_one_sided, is_enriched, Sample};
use chemprog_core::evalstats::{aggregate, build_ensemble, compute_metrics, AggregationMode, ConfusionCounts};
use chemprog_core::leia::{synthesize_class, synthesize_suite, LeiaConfig, LlmError, LlmRequest};
use chemprog_core::program::{evaluate_smiles, fixtures, parse_program};
use chemprog_core::runtime::{evaluate_suite, write_tsv, Classifier};
use chemprog_core::smarts::parse_smarts;
use chemprog_core::suite::{ClassStats, ProgramSuite, SuiteProgram};
use chemprog_core::synthetic::synthetic_ontology;
use chemprog_core::{parse_smiles, ClassifierProgram};
use common::{GenMol, GenPattern, MolOptions};
use rand::rngs::StdRng;
use rand::SeedableRng;

const OCTADECANEDIOIC_ACID: &str = "C(CCCCCCCCC(=O)O)CCCCCCCC(=O)O";

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(message())
    }
}

fn main() {
    let criteria: [(&str, Check); 11] = [
        ("alkane program verdicts and reasons", alkane_fixture),
        ("octadecanedioic acid classification and formula", octadecanedioic_acid),
        ("SMARTS matching agrees with brute-force enumeration", smarts_oracle),
        ("implicit hydrogens agree with valence rules", valence_oracle),
        ("metric values and conventions", metrics),
        ("synthesis loop with scripted client", leia_loop),
        ("end-to-end learn and evaluate on synthetic benchmark", end_to_end),
        ("ensemble selection", ensemble),
        ("enrichment statistics", statistics),
        ("benchmark construction", benchmark_builder),
        ("batch runtime", runtime),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".to_string());
            Err(msg)
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2}: {name} ({detail}; {secs:.2}s)", k + 1),
            Err(why) => {
                failures += 1;
                println!("FAIL criterion {:>2}: {name} ({why}; {secs:.2}s)", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}

fn alkane_fixture() -> Result<String, String> {
    let program = parse_program(fixtures::ALKANE).map_err(|e| e.to_string())?;
    let cases = [
        ("CCCC", true, "Molecule matches the definition of an alkane"),
        ("C1CCCCC1", false, "Contains rings, not acyclic"),
        ("C=C", false, "Contains unsaturated bonds (double or triple bonds present)"),
        (OCTADECANEDIOIC_ACID, false, "Contains atoms other than carbon and hydrogen"),
    ];
    for (smiles, membership, reason) in cases {
        let got = evaluate_smiles(&program, smiles);
        ensure(got.membership == membership && got.reason == reason, || {
            format!("{smiles}: got ({}, {:?})", got.membership, got.reason)
        })?;
    }
    Ok(format!("{} cases", cases.len()))
}

fn octadecanedioic_acid() -> Result<String, String> {
    let alkane = parse_program(fixtures::ALKANE).map_err(|e| e.to_string())?;
    let diacid = parse_program(fixtures::DICARBOXYLIC).map_err(|e| e.to_string())?;
    let a = evaluate_smiles(&alkane, OCTADECANEDIOIC_ACID);
    ensure(!a.membership, || "alkane program accepted the diacid".into())?;
    let d = evaluate_smiles(&diacid, OCTADECANEDIOIC_ACID);
    ensure(d.membership && d.reason.contains("exactly two free carboxyl groups"), || {
        format!("dicarboxylic program gave ({}, {:?})", d.membership, d.reason)
    })?;
    let formula = parse_smiles(OCTADECANEDIOIC_ACID).map_err(|e| e.to_string())?.molecular_formula();
    ensure(formula == "C18H34O4", || format!("formula {formula}"))?;
    Ok(format!("formula {formula}"))
}

fn smarts_oracle() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(0x5eed_0003);
    let opts = MolOptions::default();
    let molecules: Vec<GenMol> = (0..220).map(|_| GenMol::random(&mut rng, &opts)).collect();
    let mut patterns: Vec<GenPattern> =
        (0..20).map(|k| GenPattern::from_molecule(&mut rng, &molecules[k], 6)).collect();
    patterns.extend((0..20).map(|_| GenPattern::random(&mut rng, 6)));
    let compiled: Vec<_> = patterns
        .iter()
        .map(|p| parse_smarts(&p.smarts()).map_err(|e| format!("{}: {e}", p.smarts())))
        .collect::<Result<_, _>>()?;

    let (mut comparisons, mut positive) = (0usize, 0usize);
    let mut check =
        |mol: &GenMol, pattern: &GenPattern, compiled: &chemprog_core::SmartsPattern| -> Result<(), String> {
            let smiles = mol.smiles();
            let parsed = parse_smiles(&smiles).map_err(|e| format!("{smiles}: {e}"))?;
            let want = pattern.brute_force_count(mol);
            let count = compiled.count_matches(&parsed);
            let has = compiled.has_match(&parsed);
            comparisons += 1;
            positive += usize::from(want > 0);
            ensure(count == want && has == (want > 0), || {
                format!("{} on {smiles}: count {count} has {has}, oracle {want}", pattern.smarts())
            })
        };
    for mol in &molecules {
        for (pattern, c) in patterns.iter().zip(&compiled) {
            check(mol, pattern, c)?;
        }
        // Patterns cut from the molecule itself exercise the matching paths.
        for _ in 0..5 {
            let own = GenPattern::from_molecule(&mut rng, mol, 6);
            let c = parse_smarts(&own.smarts()).map_err(|e| format!("{}: {e}", own.smarts()))?;
            check(mol, &own, &c)?;
        }
    }
    Ok(format!(
        "{} molecules x {} patterns, {comparisons} comparisons, {positive} with matches, 0 disagreements",
        molecules.len(),
        patterns.len()
    ))
}

fn valence_oracle() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(0x5eed_0004);
    let opts = MolOptions { max_atoms: 20, max_rings: 3, ..MolOptions::default() };
    let random = 600;
    for _ in 0..random {
        let mol = GenMol::random(&mut rng, &opts);
        let smiles = mol.smiles();
        let parsed = parse_smiles(&smiles).map_err(|e| format!("{smiles}: {e}"))?;
        let total = parsed.implicit_hydrogen_total();
        ensure(total == mol.total_hydrogens(), || format!("{smiles}: {total} vs oracle {}", mol.total_hydrogens()))?;
        let mut got: Vec<(u8, u8)> =
            (0..parsed.atoms().len()).map(|i| (parsed.atoms()[i].atomic_number, parsed.carried_hydrogens(i))).collect();
        let mut want: Vec<(u8, u8)> = (0..mol.atoms.len()).map(|i| (mol.atoms[i].z, mol.hydrogens(i) as u8)).collect();
        got.sort_unstable();
        want.sort_unstable();
        ensure(got == want, || format!("{smiles}: per-atom hydrogens differ"))?;
    }
    let alkanes = 300;
    for k in 0..alkanes {
        let n = 1 + k % 30;
        let mol = GenMol::alkane(&mut rng, n);
        let smiles = mol.smiles();
        let parsed = parse_smiles(&smiles).map_err(|e| format!("{smiles}: {e}"))?;
        let h = parsed.implicit_hydrogen_total();
        ensure(h as usize == 2 * n + 2 && parsed.atom_count(HYDROGEN) == h, || {
            format!("{smiles}: {h} hydrogens for {n} carbons")
        })?;
    }
    Ok(format!("{random} random structures, {alkanes} alkanes, 0 failures"))
}

fn metrics() -> Result<String, String> {
    let m = compute_metrics(&ConfusionCounts::new(970, 30, 0, 30));
    ensure((m.f1 - 0.970).abs() <= 0.001, || format!("f1 {}", m.f1))?;
    let zero = compute_metrics(&ConfusionCounts::default());
    ensure(zero.precision == 0.0 && zero.recall == 0.0 && zero.f1 == 0.0 && zero.accuracy == 0.0, || {
        format!("empty counts gave {zero:?}")
    })?;
    let no_predictions = compute_metrics(&ConfusionCounts::new(0, 0, 5, 5));
    ensure(no_predictions.precision == 0.0 && no_predictions.f1 == 0.0, || format!("{no_predictions:?}"))?;
    for c in [ConfusionCounts::new(970, 30, 5000, 30), ConfusionCounts::new(3, 7, 11, 13), ConfusionCounts::default()] {
        let pooled = aggregate(&[c], AggregationMode::Pooled);
        let mean = aggregate(&[c], AggregationMode::PerClassMean);
        ensure(pooled == mean, || format!("{c:?}: pooled {pooled:?} vs per-class {mean:?}"))?;
    }
    Ok(format!("f1 {:.4}", m.f1))
}

fn fenced(program: &str) -> String {
    format!("The class is defined by chain length.\n```\n{program}```\nThat should work.\n")
}

/// Positives are n-alkanes C1..C20, negatives the matching primary alcohols.
fn threshold_program(hydrocarbons: usize, alcohols: usize) -> String {
    format!(
        "CLASS TEST:1 \"short chain\"\n\
         RULE ACCEPT IF ELEMENTS SUBSET_OF {{C, H}} AND ATOMS(C) <= {hydrocarbons} REASON \"short hydrocarbon\"\n\
         RULE ACCEPT IF ATOMS(O) > 0 AND ATOMS(C) <= {alcohols} REASON \"short alcohol\"\n\
         DEFAULT REJECT REASON \"neither\"\n"
    )
}

fn leia_loop() -> Result<String, String> {
    let class = ClassDataset {
        class_id: "TEST:1".into(),
        name: "short chain".into(),
        definition: Some("test".into()),
        class_smiles: None,
        positive_ids: (1..=20).map(|n| format!("p{n:02}")).collect(),
    };
    let record = |id: String, smiles: String| StructureRecord { id, name: String::new(), smiles, valid: true };
    let positives: Vec<StructureRecord> = (1..=20).map(|n| record(format!("p{n:02}"), "C".repeat(n))).collect();
    let negatives: Vec<StructureRecord> = (1..=20).map(|n| record(format!("n{n:02}"), "C".repeat(n) + "O")).collect();
    let pos: Vec<&StructureRecord> = positives.iter().collect();
    let neg: Vec<&StructureRecord> = negatives.iter().collect();
    let config = LeiaConfig { f1_threshold: 0.8, max_attempts: 4, ..LeiaConfig::default() };

    // F1 = 2tp / (2tp + fp + fn): (10,10,10) -> 0.5, (14,6,6) -> 0.7, (17,3,3) -> 0.85.
    let script =
        [threshold_program(10, 10), threshold_program(14, 6), threshold_program(17, 3), threshold_program(20, 0)];
    let improving = |req: &LlmRequest| -> Result<String, LlmError> { Ok(fenced(&script[req.attempt as usize - 1])) };
    let out = synthesize_class(&class, &pos, &neg, &config, &improving, "scripted");
    let f1s: Vec<f64> = out.program.attempt_history.iter().map(|a| a.train_f1).collect();
    ensure(out.stats.attempts_used == 3 && f1s.len() == 3, || {
        format!("attempts {} ({f1s:?})", out.stats.attempts_used)
    })?;
    for (got, want) in f1s.iter().zip([0.5, 0.7, 0.85]) {
        ensure((got - want).abs() < 1e-12, || format!("F1 sequence {f1s:?}"))?;
    }
    ensure(out.stats.reached_threshold && out.stats.best_attempt == 3, || format!("{:?}", out.stats))?;

    let garbage = |_: &LlmRequest| -> Result<String, LlmError> { Ok("```\nthis is not a program\n```".to_string()) };
    let out = synthesize_class(&class, &pos, &neg, &config, &garbage, "garbage");
    let history = &out.program.attempt_history;
    ensure(out.stats.attempts_used == 4 && history.len() == 4, || format!("{} attempts", history.len()))?;
    ensure(history.iter().all(|a| a.train_f1 == 0.0 && a.error.is_some()), || "garbage attempt scored".into())?;
    ensure(out.stats.train_metrics.f1 == 0.0 && !out.stats.reached_threshold, || format!("{:?}", out.stats))?;

    let onto = synthetic_ontology(240, 11);
    let opts = BuildOptions {
        filters: ClassFilters { min_members: 10, ..ClassFilters::default() },
        ..BuildOptions::default()
    };
    let bench = build_benchmark(&onto.entries, &opts).map_err(|e| e.to_string())?;
    let client = oracle_client(onto.programs.clone());
    let ids = onto.class_ids();
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    for (dir, jobs) in dirs.iter().zip([1, 4]) {
        synthesize_suite(&bench, &ids, &config, &client, "oracle", Some(dir.path()), jobs)
            .map_err(|e| e.to_string())?;
    }
    let (a, b) = (tree_bytes(dirs[0].path()), tree_bytes(dirs[1].path()));
    ensure(!a.is_empty() && a == b, || "suite directories differ between runs".into())?;
    Ok(format!("F1 {f1s:?}, garbage 4 attempts at 0, {} identical suite files", a.len()))
}

/// Every file under `dir` with its bytes, keyed by relative path.
fn tree_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&path).expect("readable file"));
            }
        }
    }
    out
}

/// Answers with the reference program, except that classes at odd
/// positions first get an accept-everything program.
fn oracle_client(programs: BTreeMap<String, String>) -> impl Fn(&LlmRequest) -> Result<String, LlmError> + Send + Sync {
    let order: Vec<String> = programs.keys().cloned().collect();
    move |req: &LlmRequest| {
        let text = programs.get(&req.class_id).ok_or_else(|| LlmError::Script(req.class_id.clone()))?;
        let position = order.iter().position(|id| id == &req.class_id).unwrap_or(0);
        if position % 2 == 1 && req.attempt == 1 {
            let weak = format!("CLASS {} \"guess\"\nDEFAULT ACCEPT REASON \"everything\"\n", req.class_id);
            return Ok(fenced(&weak));
        }
        Ok(fenced(text))
    }
}

fn end_to_end() -> Result<String, String> {
    let start = Instant::now();
    let onto = synthetic_ontology(600, 2024);
    let bench = build_benchmark(&onto.entries, &BuildOptions::default()).map_err(|e| e.to_string())?;
    ensure(bench.classes.len() == 12, || format!("{} classes survived the filters", bench.classes.len()))?;
    let ids: Vec<String> = bench.classes.keys().cloned().collect();
    let client = oracle_client(onto.programs.clone());
    let run = synthesize_suite(&bench, &ids, &LeiaConfig::default(), &client, "oracle", None, 4)
        .map_err(|e| e.to_string())?;
    ensure(run.failures.is_empty(), || format!("failures {:?}", run.failures))?;
    ensure(run.outcomes().all(|o| o.stats.attempts_used <= 2), || "more than two attempts".into())?;
    let per_class = evaluate_suite(&run.suite, &bench);
    let good = per_class.values().filter(|c| c.metrics().f1 >= 0.8).count();
    let elapsed = start.elapsed();
    ensure(good >= 10, || format!("{good}/12 classes at validation F1 >= 0.8"))?;
    ensure(elapsed < Duration::from_secs(600), || format!("took {elapsed:?}"))?;
    let pooled = aggregate(&per_class.values().copied().collect::<Vec<_>>(), AggregationMode::Pooled);
    Ok(format!(
        "{good}/12 classes at validation F1 >= 0.8, pooled F1 {:.3}, {} structures",
        pooled.f1,
        bench.structures.len()
    ))
}

fn ensemble() -> Result<String, String> {
    let classes: Vec<String> = ["c1", "c2", "c3", "c4"].iter().map(|s| s.to_string()).collect();
    let table = |scale: f64| -> BTreeMap<String, BTreeMap<String, f64>> {
        let rows: [(&str, &[(&str, f64)]); 3] = [
            ("exp-a", &[("c1", 0.9), ("c2", 0.5), ("c3", 0.7)]),
            ("exp-b", &[("c1", 0.9), ("c2", 0.8)]),
            ("exp-c", &[("c1", 0.3), ("c2", 0.8), ("c3", 0.2)]),
        ];
        rows.iter()
            .map(|(exp, scores)| (exp.to_string(), scores.iter().map(|(c, f)| (c.to_string(), f * scale)).collect()))
            .collect()
    };
    let base = build_ensemble(&classes, &table(1.0));
    let picks: Vec<(&str, &str)> = base.iter().map(|(c, e)| (c.as_str(), e.experiment.as_str())).collect();
    ensure(picks == [("c1", "exp-a"), ("c2", "exp-b"), ("c3", "exp-a")], || format!("{picks:?}"))?;
    ensure(base["c1"].tied_with == ["exp-b"] && base["c2"].tied_with == ["exp-c"], || "ties not reported".into())?;
    for scale in [0.5, 0.01, 1.7, 1e6] {
        let scaled = build_ensemble(&classes, &table(scale));
        let same = scaled.len() == base.len() && scaled.iter().all(|(c, e)| base[c].experiment == e.experiment);
        ensure(same, || format!("selection changed at scale {scale}"))?;
    }
    Ok("ties resolved to the first experiment name, class without candidates omitted".into())
}

fn binomial(n: u64, k: u64) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn fisher_by_enumeration(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let (row, col, total) = (a + b, a + c, a + b + c + d);
    let tail: u128 = (a..=row.min(col))
        .filter(|&x| row - x <= total - col)
        .map(|x| binomial(col, x) * binomial(total - col, row - x))
        .sum();
    tail as f64 / binomial(total, row) as f64
}

fn stats_suite() -> ProgramSuite {
    let mut suite = ProgramSuite::new("stats");
    for text in [fixtures::ALKANE, fixtures::DICARBOXYLIC] {
        suite.insert(suite_entry(parse_program(text).expect("fixture parses")));
    }
    suite
}

fn suite_entry(program: ClassifierProgram) -> SuiteProgram {
    SuiteProgram {
        stats: ClassStats {
            class_id: program.class_id.clone(),
            class_name: program.class_name.clone(),
            experiment: "fixture".into(),
            train_counts: ConfusionCounts::new(9, 1, 9, 1),
            train_metrics: compute_metrics(&ConfusionCounts::new(9, 1, 9, 1)),
            attempts_used: 1,
            reached_threshold: true,
            best_attempt: 1,
            positives_scored: 10,
            negatives_scored: 10,
            negative_sample_cap: None,
        },
        program,
    }
}

fn statistics() -> Result<String, String> {
    let p = fisher_exact_one_sided(5, 0, 0, 5);
    ensure((p - 1.0 / 252.0).abs() < 1e-12, || format!("(5,0,0,5) gave {p}"))?;
    let mut tables = 0;
    for total in 0..=30u64 {
        for a in 0..=total {
            for b in 0..=total - a {
                for c in 0..=total - a - b {
                    let d = total - a - b - c;
                    let (got, want) = (fisher_exact_one_sided(a, b, c, d), fisher_by_enumeration(a, b, c, d));
                    ensure((got - want).abs() < 1e-12, || format!("({a},{b},{c},{d}): {got} vs {want}"))?;
                    tables += 1;
                }
            }
        }
    }
    let adjusted = bh_adjust(&[0.01, 0.02, 0.04]);
    ensure(adjusted == [0.03, 0.03, 0.04], || format!("BH gave {adjusted:?}"))?;

    ensure(!is_enriched(0.001, 1.8, 50) && is_enriched(0.001, 2.5, 50), || "fold gate".into())?;
    ensure(!is_enriched(0.001, 2.5, 4) && !is_enriched(0.05, 2.5, 50), || "count or p gate".into())?;
    // Four diacids overall: too rare to test. Six alkanes, all in one sample.
    let strings = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let samples = vec![
        Sample {
            sample_id: "s1".into(),
            smiles: strings(&["C", "CC", "CCC", "CCCC", "CCCCC", "CCCCCC"]),
            metadata: None,
        },
        Sample {
            sample_id: "s2".into(),
            smiles: strings(&[
                "OC(=O)CC(=O)O",
                "OC(=O)CCC(=O)O",
                "OC(=O)CCCC(=O)O",
                "OC(=O)CCCCC(=O)O",
                "O",
                "N",
                "CO",
                "CN",
                "CCO",
                "CCN",
                "CCCO",
                "CCCN",
                "OCCO",
                "NCCN",
                "CC=O",
                "C=O",
                "CC#N",
                "CCOC",
            ]),
            metadata: None,
        },
    ];
    let report = enrich_samples(&stats_suite(), &samples).map_err(|e| e.to_string())?;
    ensure(report.excluded_classes == ["CHEBI:35692"], || format!("excluded {:?}", report.excluded_classes))?;
    let row = report.rows.iter().find(|r| r.sample_id == "s1").ok_or("no row for s1")?;
    ensure(row.enriched && row.fold_change > 2.0 && row.adjusted_p < 0.05, || format!("{row:?}"))?;
    ensure(
        report.rows.iter().all(|r| r.enriched == is_enriched(r.adjusted_p, r.fold_change, r.background_hits)),
        || "row flag disagrees with the gates".into(),
    )?;
    Ok(format!("{tables} tables enumerated, BH family {}", report.family_size))
}

fn toy_entry(id: &str, smiles: Option<&str>, parents: &[&str], defined: bool) -> OntologyEntry {
    OntologyEntry {
        id: id.to_string(),
        name: format!("entry {id}"),
        definition: defined.then(|| format!("definition of {id}")),
        smiles: smiles.map(str::to_string),
        is_a: parents.iter().map(|p| p.to_string()).collect(),
    }
}

fn toy_ontology() -> Vec<OntologyEntry> {
    vec![
        toy_entry("R", None, &[], true),
        toy_entry("A", None, &["R"], true),
        toy_entry("B", None, &["R"], true),
        toy_entry("A1", None, &["A"], true),
        toy_entry("A2", None, &["A"], true),
        toy_entry("B1", None, &["B"], false),
        toy_entry("AB", None, &["A", "B"], true),
        toy_entry("D", Some(""), &["R"], true),
        toy_entry("W", Some("*C(=O)O"), &["A"], true),
        toy_entry("P", Some("CCO"), &["A"], true),
        toy_entry("s01", Some("CC"), &["A1"], false),
        toy_entry("s02", Some("CCC"), &["A1"], false),
        toy_entry("s03", Some("CCCC"), &["A2"], false),
        toy_entry("s04", Some("CO"), &["A2", "A1"], false),
        toy_entry("s05", Some("CN"), &["B1"], false),
        toy_entry("s06", Some("CCN"), &["B1"], false),
        toy_entry("s07", Some("c1ccccc1"), &["AB"], false),
        toy_entry("s08", Some("CCl"), &["B"], false),
        toy_entry("s09", Some("C("), &["R"], false),
        toy_entry("s10", Some("CCCO"), &["P"], false),
    ]
}

fn ids(entries: &[OntologyEntry]) -> Vec<&str> {
    let mut v: Vec<&str> = entries.iter().map(|e| e.id.as_str()).collect();
    v.sort_unstable();
    v
}

/// Structures reachable upward from each class, by iterating the
/// reachability relation to a fixed point.
fn reachability(entries: &[OntologyEntry]) -> BTreeMap<String, BTreeSet<String>> {
    let n = entries.len();
    let index: BTreeMap<&str, usize> = entries.iter().enumerate().map(|(i, e)| (e.id.as_str(), i)).collect();
    let mut reach = vec![vec![false; n]; n];
    for (i, e) in entries.iter().enumerate() {
        for p in &e.is_a {
            reach[i][index[p.as_str()]] = true;
        }
    }
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if i != j && reach[i][j] {
                    let via = reach[j].clone();
                    for (k, r) in reach[i].iter_mut().enumerate() {
                        if via[k] && !*r {
                            *r = true;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (i, e) in entries.iter().enumerate() {
        for j in 0..n {
            if reach[i][j] {
                out.entry(entries[j].id.clone()).or_default().insert(e.id.clone());
            }
        }
    }
    out
}

fn benchmark_builder() -> Result<String, String> {
    let entries = toy_ontology();
    ensure(entries.len() == 20, || "toy ontology size".into())?;
    let partition = partition_entries(&entries);
    let structures: Vec<String> = (1..=10).map(|k| format!("s{k:02}")).collect();
    ensure(ids(&partition.structures) == structures, || format!("structures {:?}", ids(&partition.structures)))?;
    ensure(ids(&partition.classes) == ["A", "A1", "A2", "AB", "B", "B1", "P", "R"], || {
        format!("classes {:?}", ids(&partition.classes))
    })?;
    ensure(ids(&partition.discarded) == ["D", "W"], || format!("discarded {:?}", ids(&partition.discarded)))?;

    let open = ClassFilters { min_members: 0, max_members: usize::MAX, require_definition: false };
    let closure = build_class_datasets(&partition, &open);
    let oracle = reachability(&entries);
    let structure_set: BTreeSet<&String> = structures.iter().collect();
    for (class_id, dataset) in &closure {
        let want: BTreeSet<String> = oracle[class_id].iter().filter(|s| structure_set.contains(s)).cloned().collect();
        ensure(dataset.positive_ids == want, || format!("{class_id}: {:?} vs {want:?}", dataset.positive_ids))?;
    }
    ensure(closure.len() == 8, || format!("{} classes before filtering", closure.len()))?;

    // By hand: A1 3, A2 2, A 6, B 4 members pass; B1 lacks a definition,
    // AB and P have one member, R has ten.
    let filters = ClassFilters { min_members: 2, max_members: 6, require_definition: true };
    let kept: Vec<String> = build_class_datasets(&partition, &filters).into_keys().collect();
    ensure(kept == ["A", "A1", "A2", "B"], || format!("filtered classes {kept:?}"))?;

    let mut star = vec![toy_entry("root", None, &[], true)];
    for (class, size) in [("n24", 24), ("n25", 25), ("n5000", 5000), ("n5001", 5001)] {
        star.push(toy_entry(class, None, &["root"], true));
        star.extend((0..size).map(|k| toy_entry(&format!("{class}-{k}"), Some("C"), &[class], false)));
    }
    let kept: Vec<String> =
        build_class_datasets(&partition_entries(&star), &ClassFilters::default()).into_keys().collect();
    ensure(kept == ["n25", "n5000"], || format!("default filters kept {kept:?}"))?;

    let opts = BuildOptions { filters, seed: 7, train_fraction: 0.8 };
    let mut shuffled = entries.clone();
    shuffled.reverse();
    let mut outputs = Vec::new();
    for input in [&entries, &entries, &shuffled] {
        let bench = build_benchmark(input, &opts).map_err(|e| e.to_string())?;
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        write_benchmark(&bench, dir.path()).map_err(|e| e.to_string())?;
        outputs.push(tree_bytes(dir.path()));
    }
    ensure(outputs[0] == outputs[1] && outputs[1] == outputs[2], || "benchmark bytes differ".into())?;
    Ok("partition, closure, filters and bytes match".into())
}

fn many_programs(count: usize) -> ProgramSuite {
    let onto = synthetic_ontology(0, 0);
    let base: Vec<String> =
        onto.programs.values().cloned().chain(fixtures::ALL.iter().map(|s| s.to_string())).collect();
    let mut suite = ProgramSuite::new("runtime");
    for k in 0..count {
        let mut program = parse_program(&base[k % base.len()]).expect("reference program parses");
        program.class_id = format!("RT:{k:04}");
        suite.insert(suite_entry(program));
    }
    suite
}

fn runtime() -> Result<String, String> {
    let onto = synthetic_ontology(2500, 99);
    let mut inputs: Vec<String> =
        onto.entries.iter().filter_map(|e| e.smiles.clone()).filter(|s| !s.contains('*')).collect();
    inputs.extend(["C(", "not smiles", "C1CC"].map(str::to_string));

    for size in [1, 12, 100] {
        let suite = many_programs(size);
        let classifier = Classifier::new(&suite);
        classifier.classify_batch(&inputs, 4);
        ensure(classifier.parse_count() == inputs.len(), || {
            format!("{} parses for {} lines with {size} programs", classifier.parse_count(), inputs.len())
        })?;
    }

    let suite = many_programs(100);
    let mut big: Vec<String> = Vec::with_capacity(10_000);
    for k in 0..10_000 {
        // Distinct lines: vary each base structure with a methyl tail.
        let base = &inputs[k % inputs.len()];
        big.push(if k < inputs.len() { base.clone() } else { format!("{base}.{}", "C".repeat(1 + k / inputs.len())) });
    }
    let start = Instant::now();
    let classifier = Classifier::new(&suite);
    let parallel = classifier.classify_batch(&big, 8);
    let elapsed = start.elapsed();
    let sequential = Classifier::new(&suite).classify_batch(&big, 1);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    write_tsv(&mut a, &parallel).map_err(|e| e.to_string())?;
    write_tsv(&mut b, &sequential).map_err(|e| e.to_string())?;
    ensure(a == b, || "parallel and sequential output differ".into())?;
    let distinct: BTreeSet<&String> = big.iter().collect();
    ensure(classifier.parse_count() == distinct.len(), || format!("{} parses", classifier.parse_count()))?;
    let soft = if elapsed < Duration::from_secs(60) { "within" } else { "OVER (soft limit)" };
    Ok(format!(
        "{} lines x {} programs in {:.2}s, {soft} 60s; {} output bytes identical",
        big.len(),
        suite.len(),
        elapsed.as_secs_f64(),
        a.len()
    ))
}
