//! Scoring a specification set against labelled data.
//!
//! Each evaluation point gets one verdict:
//!
//! * **FN** when no spec box contains it;
//! * **TP** when it is covered and its label satisfies *every* covering spec;
//! * **FP** when it is covered but at least one covering spec disagrees.
//!
//! True negatives are not defined. Loose regression specs are removed with
//! [`filter_unbounded`] before scoring.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetStats, Label};
use crate::error::{Error, Result};
use crate::spec::{filter_unbounded, SpecSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    TP,
    FP,
    FN,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointVerdict {
    pub verdict: Verdict,
    /// Indices (into the scored set) of specs whose box holds the point.
    pub covering_spec_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Specs dropped by the output-range filter.
    pub specs_filtered: usize,
    /// Specs left after filtering.
    pub specs_scored: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_point: Option<Vec<PointVerdict>>,
}

impl EvalReport {
    /// Builds the derived metrics from counts. Zero denominators give 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        EvalReport {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
            specs_filtered: 0,
            specs_scored: 0,
            per_point: None,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_
    }

    /// Precision, recall and F1 as percentages with two decimals, truncated
    /// (not rounded) from the exact count ratios.
    pub fn percent_cells(&self) -> [String; 3] {
        [
            percent_truncated(self.tp, self.tp + self.fp),
            percent_truncated(self.tp, self.tp + self.fn_),
            percent_truncated(2 * self.tp, 2 * self.tp + self.fp + self.fn_),
        ]
    }
}

/// `100·num/den` truncated to two decimals; `0.00` when `den` is zero.
pub fn percent_truncated(num: usize, den: usize) -> String {
    if den == 0 {
        return "0.00".to_string();
    }
    let basis_points = (num as u128 * 10_000) / den as u128;
    format!("{}.{:02}", basis_points / 100, basis_points % 100)
}

fn check_shape(set: &SpecSet, n_features: usize, label: Label) -> Result<()> {
    if set.feature_dim() != n_features {
        return Err(Error::dim(
            "evaluation features vs spec set",
            set.feature_dim(),
            n_features,
        ));
    }
    if set.task() != label.task() {
        return Err(Error::TaskMismatch(format!(
            "{} spec set scored against {} labels",
            set.task(),
            label.task()
        )));
    }
    Ok(())
}

/// Verdict for a single labelled point under the overlap rule.
pub fn classify_point(set: &SpecSet, x: &[f64], y: Label) -> Result<PointVerdict> {
    check_shape(set, x.len(), y)?;
    Ok(classify_unchecked(set, x, y))
}

fn classify_unchecked(set: &SpecSet, x: &[f64], y: Label) -> PointVerdict {
    let mut covering = Vec::new();
    let mut consistent = true;
    for (j, spec) in set.specs().iter().enumerate() {
        if spec.input.contains_unchecked(x) {
            covering.push(j);
            // task already checked, so satisfies cannot fail
            consistent &= spec.output.satisfies(y).unwrap_or(false);
        }
    }
    let verdict = match (covering.is_empty(), consistent) {
        (true, _) => Verdict::FN,
        (false, true) => Verdict::TP,
        (false, false) => Verdict::FP,
    };
    PointVerdict {
        verdict,
        covering_spec_ids: covering,
    }
}

/// Scores `set` on `eval` without the output-range filter, keeping
/// per-point verdicts.
pub fn score(set: &SpecSet, eval: &Dataset) -> Result<EvalReport> {
    if eval.is_empty() {
        return Err(Error::invalid("evaluation set is empty"));
    }
    check_shape(set, eval.n_features(), eval.label(0))?;
    let verdicts: Vec<PointVerdict> = (0..eval.len())
        .into_par_iter()
        .map(|i| classify_unchecked(set, eval.row(i), eval.label(i)))
        .collect();
    let count = |v: Verdict| verdicts.iter().filter(|p| p.verdict == v).count();
    let mut report = EvalReport::from_counts(count(Verdict::TP), count(Verdict::FP), count(Verdict::FN));
    report.specs_scored = set.len();
    report.per_point = Some(verdicts);
    Ok(report)
}

/// Filters `set` with `alpha` over the label range in `stats`, then scores
/// what survives. `stats` should describe the full dataset (generation and
/// evaluation folds together).
pub fn evaluate(set: &SpecSet, eval: &Dataset, alpha: f64, stats: &DatasetStats) -> Result<EvalReport> {
    let kept = filter_unbounded(set, alpha, stats)?;
    let mut report = score(&kept, eval)?;
    report.specs_filtered = set.len() - kept.len();
    Ok(report)
}
