//! Confusion counts, classification metrics, aggregation across classes,
//! ensemble selection and per-prediction confidence.
//!
//! Every ratio with a zero denominator evaluates to 0.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        ConfusionCounts { tp, fp, tn, fn_ }
    }

    /// Adds one observation.
    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn metrics(&self) -> MetricSet {
        compute_metrics(self)
    }
}

impl Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, rhs: Self) -> Self {
        ConfusionCounts::new(self.tp + rhs.tp, self.fp + rhs.fp, self.tn + rhs.tn, self.fn_ + rhs.fn_)
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn compute_metrics(c: &ConfusionCounts) -> MetricSet {
    MetricSet {
        precision: ratio(c.tp, c.tp + c.fp),
        recall: ratio(c.tp, c.tp + c.fn_),
        f1: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
        accuracy: ratio(c.tp + c.tn, c.total()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    /// Unweighted mean of per-class metrics.
    PerClassMean,
    /// Metrics of the summed counts.
    Pooled,
}

impl AggregationMode {
    pub fn name(self) -> &'static str {
        match self {
            AggregationMode::PerClassMean => "per_class_mean",
            AggregationMode::Pooled => "pooled",
        }
    }

    /// Column label pairing the neutral name with the term used in the
    /// original benchmark write-up, which inverts the usual micro/macro sense.
    pub fn report_label(self) -> &'static str {
        match self {
            AggregationMode::PerClassMean => "per_class_mean [micro]",
            AggregationMode::Pooled => "pooled [macro]",
        }
    }
}

/// Aggregates per-class counts. An empty input yields all-zero metrics.
pub fn aggregate(per_class: &[ConfusionCounts], mode: AggregationMode) -> MetricSet {
    match mode {
        AggregationMode::Pooled => {
            compute_metrics(&per_class.iter().fold(ConfusionCounts::default(), |acc, c| acc + *c))
        }
        AggregationMode::PerClassMean => {
            if per_class.is_empty() {
                return MetricSet::default();
            }
            let n = per_class.len() as f64;
            let mut sum = MetricSet::default();
            for m in per_class.iter().map(compute_metrics) {
                sum.precision += m.precision;
                sum.recall += m.recall;
                sum.f1 += m.f1;
                sum.accuracy += m.accuracy;
            }
            MetricSet {
                precision: sum.precision / n,
                recall: sum.recall / n,
                f1: sum.f1 / n,
                accuracy: sum.accuracy / n,
            }
        }
    }
}

/// Precision of a positive prediction, negative predictive value of a
/// negative one.
pub fn confidence(c: &ConfusionCounts, prediction: bool) -> f64 {
    if prediction {
        ratio(c.tp, c.tp + c.fp)
    } else {
        ratio(c.tn, c.tn + c.fn_)
    }
}

fn f1_key(f1: f64) -> f64 {
    if f1.is_nan() {
        f64::NEG_INFINITY
    } else {
        f1
    }
}

/// Name of the best candidate by training F1; ties go to the
/// lexicographically smallest name. NaN scores rank lowest.
pub fn select_best(candidates: &BTreeMap<String, f64>) -> Option<&str> {
    let mut best: Option<(&str, f64)> = None;
    // BTreeMap iterates in ascending name order, so a strict comparison keeps
    // the earliest name among equal scores.
    for (name, &f1) in candidates {
        let key = f1_key(f1);
        if best.is_none_or(|(_, b)| key > b) {
            best = Some((name, key));
        }
    }
    best.map(|(name, _)| name)
}

/// Outcome of ensemble selection for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleChoice {
    pub class_id: String,
    pub experiment: String,
    pub train_f1: f64,
    /// Other experiments that reached the same score.
    pub tied_with: Vec<String>,
}

/// Chooses, per class, the experiment with the highest training F1.
///
/// `candidates` maps experiment name to per-class training F1. Classes in
/// `classes` with no candidate are omitted and logged.
pub fn build_ensemble(
    classes: &[String],
    candidates: &BTreeMap<String, BTreeMap<String, f64>>,
) -> BTreeMap<String, EnsembleChoice> {
    let mut out = BTreeMap::new();
    for class_id in classes {
        let scores: BTreeMap<String, f64> = candidates
            .iter()
            .filter_map(|(exp, per_class)| per_class.get(class_id).map(|&f1| (exp.clone(), f1)))
            .collect();
        let Some(best) = select_best(&scores) else {
            log::warn!("class {class_id} has no candidate programs; omitted from ensemble");
            continue;
        };
        let train_f1 = scores[best];
        let tied_with = scores
            .iter()
            .filter(|(name, &f1)| name.as_str() != best && f1_key(f1) == f1_key(train_f1))
            .map(|(name, _)| name.clone())
            .collect();
        out.insert(
            class_id.clone(),
            EnsembleChoice { class_id: class_id.clone(), experiment: best.to_string(), train_f1, tied_with },
        );
    }
    out
}

/// Tab-separated metrics report: one row per class, then one row per
/// aggregation mode.
pub fn metrics_report(per_class: &BTreeMap<String, ConfusionCounts>) -> String {
    let mut out = String::from("class_id\ttp\tfp\ttn\tfn\tprecision\trecall\tf1\taccuracy\n");
    let row = |out: &mut String, label: &str, c: Option<&ConfusionCounts>, m: &MetricSet| {
        let counts = match c {
            Some(c) => format!("{}\t{}\t{}\t{}", c.tp, c.fp, c.tn, c.fn_),
            None => "\t\t\t".to_string(),
        };
        let _ = writeln!(out, "{label}\t{counts}\t{:.4}\t{:.4}\t{:.4}\t{:.4}", m.precision, m.recall, m.f1, m.accuracy);
    };
    for (class_id, c) in per_class {
        row(&mut out, class_id, Some(c), &compute_metrics(c));
    }
    let all: Vec<ConfusionCounts> = per_class.values().copied().collect();
    let pooled_counts = all.iter().fold(ConfusionCounts::default(), |a, c| a + *c);
    row(&mut out, AggregationMode::PerClassMean.report_label(), None, &aggregate(&all, AggregationMode::PerClassMean));
    row(
        &mut out,
        AggregationMode::Pooled.report_label(),
        Some(&pooled_counts),
        &aggregate(&all, AggregationMode::Pooled),
    );
    out
}
