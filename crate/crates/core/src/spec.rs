//! Specification data model.
//!
//! A [`Specification`] states that every input inside a closed
//! [`Hyperrectangle`] should map to an output satisfying its
//! [`OutputConstraint`]. Boxes may have infinite sides; containment is closed
//! on every finite side.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dataset::{Dataset, DatasetStats, Label, TaskKind};
use crate::error::{Error, Result};

/// Axis-aligned closed box `∏ [lower_j, upper_j]`, with `-∞`/`+∞` allowed on
/// the respective side.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperrectangle {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Hyperrectangle {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::dim("box upper bound", lower.len(), upper.len()));
        }
        if lower.is_empty() {
            return Err(Error::invalid("box must have at least one dimension"));
        }
        for (j, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || hi.is_nan() {
                return Err(Error::invalid(format!("box dimension {j} has a NaN bound")));
            }
            if lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::invalid(format!(
                    "box dimension {j} has an empty side [{lo}, {hi}]"
                )));
            }
            if lo > hi {
                return Err(Error::invalid(format!(
                    "box dimension {j}: lower {lo} exceeds upper {hi}"
                )));
            }
        }
        Ok(Hyperrectangle { lower, upper })
    }

    /// The whole space `ℝ^dim`.
    pub fn unbounded(dim: usize) -> Self {
        Hyperrectangle {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    /// The degenerate box `{x}`.
    pub fn point(x: &[f64]) -> Result<Self> {
        Self::new(x.to_vec(), x.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }

    pub fn contains(&self, point: &[f64]) -> Result<bool> {
        if point.len() != self.dim() {
            return Err(Error::dim("point", self.dim(), point.len()));
        }
        Ok(self.contains_unchecked(point))
    }

    /// Containment without the dimension check.
    #[inline]
    pub fn contains_unchecked(&self, point: &[f64]) -> bool {
        debug_assert_eq!(point.len(), self.dim());
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(point)
            .all(|((&lo, &hi), &x)| lo <= x && x <= hi)
    }

    /// True if `self ⊆ other` component-wise.
    pub fn is_subset_of(&self, other: &Hyperrectangle) -> bool {
        self.dim() == other.dim()
            && (0..self.dim())
                .all(|j| other.lower[j] <= self.lower[j] && self.upper[j] <= other.upper[j])
    }

    /// Replaces infinite sides with the given finite limits.
    pub fn clamp_infinite(&self, lo: &[f64], hi: &[f64]) -> Result<Hyperrectangle> {
        if lo.len() != self.dim() || hi.len() != self.dim() {
            return Err(Error::dim("clamp limits", self.dim(), lo.len().min(hi.len())));
        }
        let lower: Vec<f64> = (0..self.dim())
            .map(|j| if self.lower[j].is_finite() { self.lower[j] } else { lo[j].min(self.upper[j]) })
            .collect();
        let upper: Vec<f64> = (0..self.dim())
            .map(|j| if self.upper[j].is_finite() { self.upper[j] } else { hi[j].max(lower[j]) })
            .collect();
        Hyperrectangle::new(lower, upper)
    }
}

impl fmt::Display for Hyperrectangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if j > 0 {
                f.write_str("×")?;
            }
            write!(f, "[{lo}, {hi}]")?;
        }
        Ok(())
    }
}

/// Post-condition on the output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputConstraint {
    ClassLabel(usize),
    /// Closed interval, both ends finite.
    Interval { lo: f64, hi: f64 },
}

impl OutputConstraint {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::invalid(format!("invalid output interval [{lo}, {hi}]")));
        }
        Ok(OutputConstraint::Interval { lo, hi })
    }

    pub fn task(&self) -> TaskKind {
        match self {
            OutputConstraint::ClassLabel(_) => TaskKind::Classification,
            OutputConstraint::Interval { .. } => TaskKind::Regression,
        }
    }

    /// Width of the admitted output range; zero for a class label.
    pub fn width(&self) -> f64 {
        match *self {
            OutputConstraint::ClassLabel(_) => 0.0,
            OutputConstraint::Interval { lo, hi } => hi - lo,
        }
    }

    pub fn satisfies(&self, label: Label) -> Result<bool> {
        match (*self, label) {
            (OutputConstraint::ClassLabel(c), Label::Class(y)) => Ok(c == y),
            (OutputConstraint::Interval { lo, hi }, Label::Real(y)) => Ok(lo <= y && y <= hi),
            (c, l) => Err(Error::TaskMismatch(format!(
                "{} constraint checked against a {} label",
                c.task(),
                l.task()
            ))),
        }
    }
}

impl Serialize for OutputConstraint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OutputRecord::from(*self).serialize(s)
    }
}

impl fmt::Display for OutputConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputConstraint::ClassLabel(c) => write!(f, "class {c}"),
            OutputConstraint::Interval { lo, hi } => write!(f, "[{lo}, {hi}]"),
        }
    }
}

/// `input box → output constraint`.
#[derive(Debug, Clone, PartialEq)]
pub struct Specification {
    pub input: Hyperrectangle,
    pub output: OutputConstraint,
    /// Where the spec came from, e.g. `tree:leaf=12`.
    pub provenance: String,
}

/// Ordered specifications sharing a task and feature width, plus the
/// generator name and parameters that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecSet {
    specs: Vec<Specification>,
    task: TaskKind,
    feature_dim: usize,
    pub generator: String,
    pub params: Map<String, Value>,
}

impl SpecSet {
    pub fn new(task: TaskKind, feature_dim: usize, generator: impl Into<String>) -> Self {
        SpecSet {
            specs: Vec::new(),
            task,
            feature_dim,
            generator: generator.into(),
            params: Map::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn push(&mut self, spec: Specification) -> Result<()> {
        if spec.input.dim() != self.feature_dim {
            return Err(Error::dim("spec input box", self.feature_dim, spec.input.dim()));
        }
        if spec.output.task() != self.task {
            return Err(Error::TaskMismatch(format!(
                "{} output in a {} spec set",
                spec.output.task(),
                self.task
            )));
        }
        self.specs.push(spec);
        Ok(())
    }

    pub fn specs(&self) -> &[Specification] {
        &self.specs
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn task(&self) -> TaskKind {
        self.task
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// Same metadata, different members (all assumed valid for this set).
    fn with_specs(&self, specs: Vec<Specification>) -> SpecSet {
        SpecSet {
            specs,
            task: self.task,
            feature_dim: self.feature_dim,
            generator: self.generator.clone(),
            params: self.params.clone(),
        }
    }

    /// Keeps only the specs satisfying `keep`, preserving order.
    pub fn retain(&self, keep: impl Fn(&Specification) -> bool) -> SpecSet {
        self.with_specs(self.specs.iter().filter(|s| keep(s)).cloned().collect())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = SpecFile::from(self);
        serde_json::to_string_pretty(&file).map_err(|e| Error::Format {
            path: "<memory>".into(),
            message: e.to_string(),
        })
    }

    pub fn from_json(text: &str) -> Result<SpecSet> {
        Self::parse(text, "<memory>")
    }

    fn parse(text: &str, origin: &str) -> Result<SpecSet> {
        let file: SpecFile = serde_json::from_str(text).map_err(|e| Error::Format {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        file.into_specset().map_err(|e| Error::Format {
            path: origin.to_string(),
            message: e.to_string(),
        })
    }
}

/// Applies the extraction rule to the generation points inside `region`.
///
/// Classification yields the most common label (ties go to the smallest
/// class id); regression yields `[mean − std, mean + std]` with the
/// population standard deviation. Returns `None` when the box holds no
/// generation point.
pub fn extract_specification(
    region: &Hyperrectangle,
    gen: &Dataset,
    provenance: impl Into<String>,
) -> Result<Option<Specification>> {
    if region.dim() != gen.n_features() {
        return Err(Error::dim("box", gen.n_features(), region.dim()));
    }
    Ok(extract_from_candidates(region, gen, 0..gen.len(), provenance))
}

/// As [`extract_specification`], restricted to a candidate row subset that
/// must include every generation row inside `region`.
pub(crate) fn extract_from_candidates(
    region: &Hyperrectangle,
    gen: &Dataset,
    candidates: impl IntoIterator<Item = usize>,
    provenance: impl Into<String>,
) -> Option<Specification> {
    let inside: Vec<usize> = candidates
        .into_iter()
        .filter(|&i| region.contains_unchecked(gen.row(i)))
        .collect();
    if inside.is_empty() {
        return None;
    }
    let output = match gen.labels() {
        crate::Labels::Class(ys) => {
            let mut counts: Vec<usize> = Vec::new();
            for &i in &inside {
                let c = ys[i];
                if counts.len() <= c {
                    counts.resize(c + 1, 0);
                }
                counts[c] += 1;
            }
            // max_by_key keeps the last maximum, so scan in reverse
            let (majority, _) = counts
                .iter()
                .enumerate()
                .rev()
                .max_by_key(|&(_, n)| *n)
                .expect("non-empty");
            OutputConstraint::ClassLabel(majority)
        }
        crate::Labels::Real(ys) => {
            let vals: Vec<f64> = inside.iter().map(|&i| ys[i]).collect();
            let (lo, hi) = mean_std_band(&vals);
            OutputConstraint::Interval { lo, hi }
        }
    };
    Some(Specification {
        input: region.clone(),
        output,
        provenance: provenance.into(),
    })
}

/// `(mean − std, mean + std)` with the population std. A constant sample
/// gives the exact degenerate interval.
fn mean_std_band(vals: &[f64]) -> (f64, f64) {
    let first = vals[0];
    if vals.iter().all(|&v| v == first) {
        return (first, first);
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean - std, mean + std)
}

/// Drops specs whose output range is too loose to be useful.
///
/// Classification specs must pin a single class. Regression specs survive iff
/// `hi − lo ≤ alpha·(y_max − y_min)`, with the label range taken from `stats`
/// (which should cover the whole dataset, not one fold).
pub fn filter_unbounded(set: &SpecSet, alpha: f64, stats: &DatasetStats) -> Result<SpecSet> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} must lie in (0, 1)")));
    }
    let limit = alpha * (stats.y_max - stats.y_min);
    Ok(match set.task() {
        TaskKind::Classification => {
            set.retain(|s| matches!(s.output, OutputConstraint::ClassLabel(_)))
        }
        TaskKind::Regression => set.retain(|s| match s.output {
            OutputConstraint::Interval { lo, hi } => hi - lo <= limit,
            OutputConstraint::ClassLabel(_) => false,
        }),
    })
}

pub fn save_specset(set: &SpecSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, set.to_json()? + "\n").map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn load_specset(path: impl AsRef<Path>) -> Result<SpecSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    SpecSet::parse(&text, &path.display().to_string())
}

// On-disk form. Infinite bounds are `null`.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    task: TaskKind,
    feature_dim: usize,
    generator: String,
    #[serde(default)]
    params: Map<String, Value>,
    specs: Vec<SpecRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecRecord {
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
    output: OutputRecord,
    #[serde(default)]
    provenance: String,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum OutputRecord {
    Class { class: usize },
    Interval { lo: f64, hi: f64 },
}

impl From<OutputConstraint> for OutputRecord {
    fn from(c: OutputConstraint) -> Self {
        match c {
            OutputConstraint::ClassLabel(class) => OutputRecord::Class { class },
            OutputConstraint::Interval { lo, hi } => OutputRecord::Interval { lo, hi },
        }
    }
}

impl From<&SpecSet> for SpecFile {
    fn from(set: &SpecSet) -> Self {
        let bound = |v: &f64| v.is_finite().then_some(*v);
        SpecFile {
            task: set.task,
            feature_dim: set.feature_dim,
            generator: set.generator.clone(),
            params: set.params.clone(),
            specs: set
                .specs
                .iter()
                .map(|s| SpecRecord {
                    lower: s.input.lower.iter().map(bound).collect(),
                    upper: s.input.upper.iter().map(bound).collect(),
                    output: s.output.into(),
                    provenance: s.provenance.clone(),
                })
                .collect(),
        }
    }
}

impl SpecFile {
    fn into_specset(self) -> Result<SpecSet> {
        if self.feature_dim == 0 {
            return Err(Error::invalid("feature_dim must be positive"));
        }
        let mut set = SpecSet::new(self.task, self.feature_dim, self.generator);
        set.params = self.params;
        for (i, rec) in self.specs.into_iter().enumerate() {
            let lower = rec.lower.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect();
            let upper = rec.upper.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
            let input = Hyperrectangle::new(lower, upper)
                .map_err(|e| Error::invalid(format!("spec {i}: {e}")))?;
            let output = match rec.output {
                OutputRecord::Class { class } => OutputConstraint::ClassLabel(class),
                OutputRecord::Interval { lo, hi } => OutputConstraint::interval(lo, hi)
                    .map_err(|e| Error::invalid(format!("spec {i}: {e}")))?,
            };
            set.push(Specification {
                input,
                output,
                provenance: rec.provenance,
            })
            .map_err(|e| Error::invalid(format!("spec {i}: {e}")))?;
        }
        Ok(set)
    }
}
