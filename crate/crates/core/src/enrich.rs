//! Per-sample class over-representation against the pooled background of
//! all samples: one-sided Fisher exact test with Benjamini-Hochberg control.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::runtime::{Classifier, StructureResult};
use crate::suite::ProgramSuite;

pub const MAX_ADJUSTED_P: f64 = 0.05;
pub const MIN_FOLD_CHANGE: f64 = 2.0;
/// Classes with fewer background hits than this are not tested.
pub const MIN_BACKGROUND_HITS: usize = 5;

#[derive(Debug, Error)]
pub enum EnrichError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate sample id {id:?}")]
    DuplicateSample { line: usize, id: String },
    #[error("no sample contains a parseable structure")]
    EmptyBackground,
    #[error("no samples given")]
    NoSamples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub sample_id: String,
    pub smiles: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentRow {
    pub sample_id: String,
    pub class_id: String,
    pub sample_hits: usize,
    pub sample_size: usize,
    pub background_hits: usize,
    pub background_size: usize,
    pub fold_change: f64,
    pub p_value: f64,
    pub adjusted_p: f64,
    pub enriched: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnrichmentReport {
    /// Tested (sample, class) pairs, sorted by sample then class.
    pub rows: Vec<EnrichmentRow>,
    /// Number of tests the correction was applied over.
    pub family_size: usize,
    pub background_size: usize,
    /// Classes not tested because they were too rare in the background.
    pub excluded_classes: Vec<String>,
    /// Unparseable SMILES per sample, with the parser's message.
    pub unparseable: BTreeMap<String, Vec<(String, String)>>,
}

/// Reads samples, one JSON object per line; blank lines are skipped.
pub fn parse_samples<R: BufRead>(reader: R) -> Result<Vec<Sample>, EnrichError> {
    let mut samples = Vec::new();
    let mut seen = BTreeSet::new();
    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let line = line.map_err(|source| EnrichError::Io { path: format!("line {line_no}"), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: Sample = serde_json::from_str(&line)
            .map_err(|e| EnrichError::Malformed { line: line_no, message: e.to_string() })?;
        if !seen.insert(sample.sample_id.clone()) {
            return Err(EnrichError::DuplicateSample { line: line_no, id: sample.sample_id });
        }
        samples.push(sample);
    }
    Ok(samples)
}

pub fn load_samples(path: &Path) -> Result<Vec<Sample>, EnrichError> {
    let file =
        std::fs::File::open(path).map_err(|source| EnrichError::Io { path: path.display().to_string(), source })?;
    parse_samples(io::BufReader::new(file))
}

/// Number of distinct parseable structures in `smiles` that each class
/// accepts. Classes with no hits are absent.
pub fn count_class_memberships(suite: &ProgramSuite, smiles: &[String]) -> BTreeMap<String, usize> {
    let distinct: Vec<&String> = smiles.iter().collect::<BTreeSet<_>>().into_iter().collect();
    let classifier = Classifier::new(suite);
    let mut hits = BTreeMap::new();
    for result in classifier.classify_batch(&distinct, 1) {
        if let StructureResult::Rows(rows) = result {
            for row in rows.into_iter().filter(|r| r.membership) {
                *hits.entry(row.class_id).or_insert(0) += 1;
            }
        }
    }
    hits
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    table.push(0.0);
    let mut acc = 0.0;
    for k in 1..=n {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

/// One-sided Fisher exact test for over-representation: the probability of
/// a top-left cell of at least `a` among tables with the same margins.
pub fn fisher_exact_one_sided(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let row = a + b;
    let col = a + c;
    let total = a + b + c + d;
    let low = (row + col).saturating_sub(total);
    let high = row.min(col);
    if a <= low {
        return 1.0;
    }
    let lf = ln_factorials(total as usize);
    let f = |k: u64| lf[k as usize];
    // ln P(X = x) for the hypergeometric distribution of the top-left cell.
    let ln_p = |x: u64| {
        f(row) + f(total - row) + f(col) + f(total - col)
            - f(total)
            - f(x)
            - f(row - x)
            - f(col - x)
            - f(total + x - row - col)
    };
    let terms: Vec<f64> = (a..=high).map(ln_p).collect();
    let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - peak).exp()).sum();
    (peak + sum.ln()).exp().clamp(0.0, 1.0)
}

/// Benjamini-Hochberg step-up adjustment, returned in input order.
pub fn bh_adjust(p_values: &[f64]) -> Vec<f64> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p_values[i].total_cmp(&p_values[j]).then(i.cmp(&j)));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0_f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        let value = m as f64 * p_values[i] / (rank + 1) as f64;
        running = running.min(value);
        adjusted[i] = running.min(1.0);
    }
    adjusted
}

pub fn is_enriched(adjusted_p: f64, fold_change: f64, background_hits: usize) -> bool {
    adjusted_p < MAX_ADJUSTED_P && fold_change > MIN_FOLD_CHANGE && background_hits >= MIN_BACKGROUND_HITS
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Tests every (sample, class) pair whose class has at least
/// [`MIN_BACKGROUND_HITS`] background hits. The background is the set of
/// distinct parseable structures across all samples, tested sample
/// included. Each distinct SMILES is classified once.
pub fn enrich_samples(suite: &ProgramSuite, samples: &[Sample]) -> Result<EnrichmentReport, EnrichError> {
    if samples.is_empty() {
        return Err(EnrichError::NoSamples);
    }
    let universe: Vec<&String> = samples.iter().flat_map(|s| &s.smiles).collect::<BTreeSet<_>>().into_iter().collect();
    let classifier = Classifier::new(suite);
    let results = classifier.classify_batch(&universe, rayon::current_num_threads());

    // For every parseable structure, the classes that accept it.
    let mut accepted: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut errors: BTreeMap<&str, String> = BTreeMap::new();
    for (smiles, result) in universe.iter().zip(&results) {
        match result {
            StructureResult::Rows(rows) => {
                let classes = rows.iter().filter(|r| r.membership).map(|r| r.class_id.as_str()).collect();
                accepted.insert(smiles.as_str(), classes);
            }
            StructureResult::Invalid { error, .. } => {
                errors.insert(smiles.as_str(), error.clone());
            }
        }
    }
    let background_size = accepted.len();
    if background_size == 0 {
        return Err(EnrichError::EmptyBackground);
    }

    let mut background_hits: BTreeMap<&str, usize> = suite.programs.keys().map(|id| (id.as_str(), 0)).collect();
    for classes in accepted.values() {
        for class in classes {
            *background_hits.get_mut(class).expect("suite class") += 1;
        }
    }
    let (tested, excluded): (Vec<_>, Vec<_>) =
        background_hits.iter().partition(|(_, &hits)| hits >= MIN_BACKGROUND_HITS);

    let mut sorted: Vec<&Sample> = samples.iter().collect();
    sorted.sort_by(|x, y| x.sample_id.cmp(&y.sample_id));
    let mut rows = Vec::new();
    let mut p_values = Vec::new();
    let mut unparseable = BTreeMap::new();
    for sample in sorted {
        let distinct: BTreeSet<&str> = sample.smiles.iter().map(String::as_str).collect();
        let bad: Vec<(String, String)> =
            distinct.iter().filter_map(|s| errors.get(s).map(|e| (s.to_string(), e.clone()))).collect();
        if !bad.is_empty() {
            unparseable.insert(sample.sample_id.clone(), bad);
        }
        let members: Vec<&Vec<&str>> = distinct.iter().filter_map(|s| accepted.get(s)).collect();
        let sample_size = members.len();
        let mut hits: BTreeMap<&str, usize> = BTreeMap::new();
        for classes in &members {
            for class in *classes {
                *hits.entry(class).or_insert(0) += 1;
            }
        }
        for &(&class_id, &bg_hits) in &tested {
            let a = hits.get(class_id).copied().unwrap_or(0);
            let b = sample_size - a;
            let c = bg_hits - a;
            let d = background_size - sample_size - c;
            let p = fisher_exact_one_sided(a as u64, b as u64, c as u64, d as u64);
            p_values.push(p);
            rows.push(EnrichmentRow {
                sample_id: sample.sample_id.clone(),
                class_id: class_id.to_string(),
                sample_hits: a,
                sample_size,
                background_hits: bg_hits,
                background_size,
                fold_change: ratio(a, sample_size) / ratio(bg_hits, background_size),
                p_value: p,
                adjusted_p: p,
                enriched: false,
            });
        }
    }
    for (row, adjusted) in rows.iter_mut().zip(bh_adjust(&p_values)) {
        row.adjusted_p = adjusted;
        row.enriched = is_enriched(adjusted, row.fold_change, row.background_hits);
    }
    Ok(EnrichmentReport {
        family_size: rows.len(),
        rows,
        background_size,
        excluded_classes: excluded.into_iter().map(|(id, _)| id.to_string()).collect(),
        unparseable,
    })
}

/// Tab-separated rows with a trailing `family_size` column.
pub fn write_report_tsv<W: Write>(out: &mut W, report: &EnrichmentReport) -> io::Result<()> {
    writeln!(
        out,
        "sample_id\tclass_id\tsample_hits\tsample_size\tbackground_hits\tbackground_size\tfold_change\tp_value\tadjusted_p\tenriched\tfamily_size"
    )?;
    for r in &report.rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6e}\t{:.6e}\t{}\t{}",
            r.sample_id,
            r.class_id,
            r.sample_hits,
            r.sample_size,
            r.background_hits,
            r.background_size,
            r.fold_change,
            r.p_value,
            r.adjusted_p,
            r.enriched,
            report.family_size
        )?;
    }
    Ok(())
}

/// One JSON object per row, each carrying `family_size`.
pub fn write_report_json_lines<W: Write>(out: &mut W, report: &EnrichmentReport) -> io::Result<()> {
    for r in &report.rows {
        let mut value = serde_json::to_value(r)?;
        value["family_size"] = report.family_size.into();
        serde_json::to_writer(&mut *out, &value)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
