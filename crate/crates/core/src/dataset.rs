//! Tabular datasets: CSV loading, synthetic corpora, windowing, binning and
//! the generation/evaluation split.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Classification,
    Regression,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskKind::Classification => f.write_str("classification"),
            TaskKind::Regression => f.write_str("regression"),
        }
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "classification" | "class" | "c" => Ok(TaskKind::Classification),
            "regression" | "reg" | "r" => Ok(TaskKind::Regression),
            other => Err(Error::invalid(format!("unknown task kind `{other}`"))),
        }
    }
}

/// A single label value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Label {
    Class(usize),
    Real(f64),
}

impl Label {
    pub fn task(&self) -> TaskKind {
        match self {
            Label::Class(_) => TaskKind::Classification,
            Label::Real(_) => TaskKind::Regression,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            Label::Class(c) => c as f64,
            Label::Real(y) => y,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Class(c) => write!(f, "{c}"),
            Label::Real(y) => write!(f, "{y}"),
        }
    }
}

/// The label column. The variant fixes the task kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Labels {
    Class(Vec<usize>),
    Real(Vec<f64>),
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Class(v) => v.len(),
            Labels::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn task(&self) -> TaskKind {
        match self {
            Labels::Class(_) => TaskKind::Classification,
            Labels::Real(_) => TaskKind::Regression,
        }
    }

    pub fn get(&self, i: usize) -> Label {
        match self {
            Labels::Class(v) => Label::Class(v[i]),
            Labels::Real(v) => Label::Real(v[i]),
        }
    }

    fn select(&self, idx: &[usize]) -> Labels {
        match self {
            Labels::Class(v) => Labels::Class(idx.iter().map(|&i| v[i]).collect()),
            Labels::Real(v) => Labels::Real(idx.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// An N×k feature matrix (row-major) with one label per row.
///
/// Invariants: N ≥ 1, k ≥ 1, every feature and label finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Labels,
    feature_names: Option<Vec<String>>,
}

/// Per-feature and label extremes of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub x_min: Vec<f64>,
    pub x_max: Vec<f64>,
    pub y_min: f64,
    pub y_max: f64,
}

impl DatasetStats {
    /// Extremes over the union of the two datasets the stats were taken from.
    pub fn union(&self, other: &DatasetStats) -> Result<DatasetStats> {
        if self.x_min.len() != other.x_min.len() {
            return Err(Error::dim(
                "dataset stats feature width",
                self.x_min.len(),
                other.x_min.len(),
            ));
        }
        Ok(DatasetStats {
            x_min: zip_with(&self.x_min, &other.x_min, f64::min),
            x_max: zip_with(&self.x_max, &other.x_max, f64::max),
            y_min: self.y_min.min(other.y_min),
            y_max: self.y_max.max(other.y_max),
        })
    }

    pub fn n_features(&self) -> usize {
        self.x_min.len()
    }
}

fn zip_with(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

impl Dataset {
    /// Builds a dataset from rows, validating shape and finiteness.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Labels) -> Result<Self> {
        let n_features = rows.first().map(Vec::len).unwrap_or(0);
        let mut features = Vec::with_capacity(rows.len() * n_features);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_features {
                return Err(Error::dim(format!("row {i} width"), n_features, row.len()));
            }
            features.extend_from_slice(row);
        }
        Self::from_flat(features, n_features, labels)
    }

    /// Builds a dataset from a row-major feature buffer.
    pub fn from_flat(features: Vec<f64>, n_features: usize, labels: Labels) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("dataset must have at least one row"));
        }
        if n_features == 0 {
            return Err(Error::invalid("dataset must have at least one feature"));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::dim(
                "feature buffer length",
                labels.len() * n_features,
                features.len(),
            ));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite feature at row {}, column {}",
                pos / n_features,
                pos % n_features
            )));
        }
        if let Labels::Real(ys) = &labels {
            if let Some(pos) = ys.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("non-finite label at row {pos}")));
            }
        }
        Ok(Dataset {
            features,
            n_features,
            labels,
            feature_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features {
            return Err(Error::dim("feature names", self.n_features, names.len()));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn task(&self) -> TaskKind {
        self.labels.task()
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels.get(i)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.n_features)
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Header names, falling back to `x0, x1, ...`.
    pub fn column_names(&self) -> Vec<String> {
        match &self.feature_names {
            Some(n) => n.clone(),
            None => (0..self.n_features).map(|j| format!("x{j}")).collect(),
        }
    }

    /// Number of classes `C` (max label + 1); `None` for regression.
    pub fn num_classes(&self) -> Option<usize> {
        match &self.labels {
            Labels::Class(v) => v.iter().max().map(|m| m + 1),
            Labels::Real(_) => None,
        }
    }

    pub fn stats(&self) -> DatasetStats {
        let k = self.n_features;
        let mut x_min = vec![f64::INFINITY; k];
        let mut x_max = vec![f64::NEG_INFINITY; k];
        for row in self.rows() {
            for j in 0..k {
                x_min[j] = x_min[j].min(row[j]);
                x_max[j] = x_max[j].max(row[j]);
            }
        }
        let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..self.len() {
            let y = self.label(i).as_f64();
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
        DatasetStats {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    /// Rows at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> Result<Dataset> {
        let mut features = Vec::with_capacity(idx.len() * self.n_features);
        for &i in idx {
            features.extend_from_slice(self.row(i));
        }
        let mut out = Dataset::from_flat(features, self.n_features, self.labels.select(idx))?;
        out.feature_names = self.feature_names.clone();
        Ok(out)
    }

    /// Seeded shuffle split: the first `⌊gen_fraction·N⌋` shuffled rows form
    /// the generation fold, the rest the evaluation fold.
    pub fn split(&self, gen_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        let n_gen = self.gen_count(gen_fraction)?;
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Ok((self.select(&idx[..n_gen])?, self.select(&idx[n_gen..])?))
    }

    /// Chronological split: leading rows go to the generation fold.
    pub fn split_ordered(&self, gen_fraction: f64) -> Result<(Dataset, Dataset)> {
        let idx: Vec<usize> = (0..self.len()).collect();
        let n_gen = self.gen_count(gen_fraction)?;
        Ok((self.select(&idx[..n_gen])?, self.select(&idx[n_gen..])?))
    }

    fn gen_count(&self, gen_fraction: f64) -> Result<usize> {
        if !(gen_fraction > 0.0 && gen_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "split fraction {gen_fraction} must lie in (0, 1)"
            )));
        }
        let n = self.len();
        let n_gen = (gen_fraction * n as f64).floor() as usize;
        if n_gen == 0 || n_gen == n {
            return Err(Error::invalid(format!(
                "split fraction {gen_fraction} of {n} rows leaves an empty {} fold",
                if n_gen == 0 { "generation" } else { "evaluation" }
            )));
        }
        Ok(n_gen)
    }

    /// Writes the dataset as CSV with the label in the last column.
    pub fn write_csv(&self, path: impl AsRef<Path>, label_name: &str) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        self.write_csv_inner(file, label_name, path)
    }

    /// As [`Dataset::write_csv`], into any writer.
    pub fn write_csv_to(&self, out: impl std::io::Write, label_name: &str) -> Result<()> {
        self.write_csv_inner(out, label_name, Path::new("-"))
    }

    fn write_csv_inner(&self, out: impl std::io::Write, label_name: &str, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = self.column_names();
        header.push(label_name.to_string());
        w.write_record(&header).map_err(|e| csv_io(path, e))?;
        let mut rec = Vec::with_capacity(self.n_features + 1);
        for i in 0..self.len() {
            rec.clear();
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            rec.push(self.label(i).to_string());
            w.write_record(&rec).map_err(|e| csv_io(path, e))?;
        }
        w.flush().map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    let kind = match e.kind() {
        csv::ErrorKind::Io(io) => io.kind(),
        _ => std::io::ErrorKind::InvalidData,
    };
    Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(kind, e.to_string()),
    }
}

/// How the label column of a CSV is chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

impl From<&str> for LabelColumn {
    fn from(s: &str) -> Self {
        LabelColumn::Name(s.to_string())
    }
}

/// Loads a headed CSV. The label column is removed from the features; row
/// order is preserved.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &LabelColumn,
    task: TaskKind,
) -> Result<Dataset> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let cell_err = |row: usize, column: &str, message: String| Error::Csv {
        path: shown.clone(),
        row,
        column: column.to_string(),
        message,
    };

    let headers = rdr
        .headers()
        .map_err(|e| cell_err(0, "", e.to_string()))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].trim().is_empty()) {
        return Err(cell_err(0, "", "empty file".into()));
    }
    let label_idx = match label_column {
        LabelColumn::Index(i) if *i < headers.len() => *i,
        LabelColumn::Name(name) => headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| cell_err(0, name, "label column not found in header".into()))?,
        LabelColumn::Index(i) => {
            return Err(cell_err(
                0,
                &i.to_string(),
                format!("label column index out of range ({} columns)", headers.len()),
            ))
        }
    };
    if headers.len() < 2 {
        return Err(cell_err(0, "", "need at least one feature column".into()));
    }
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, h)| h.trim().to_string())
        .collect();

    let mut features = Vec::new();
    let mut class_labels = Vec::new();
    let mut real_labels = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = rec.map_err(|e| cell_err(row, "", e.to_string()))?;
        if rec.len() != headers.len() {
            return Err(cell_err(
                row,
                "",
                format!("expected {} fields, found {}", headers.len(), rec.len()),
            ));
        }
        for (j, cell) in rec.iter().enumerate() {
            let column = &headers[j];
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| cell_err(row, column, format!("non-numeric value `{cell}`")))?;
            if !v.is_finite() {
                return Err(cell_err(row, column, format!("non-finite value `{cell}`")));
            }
            if j != label_idx {
                features.push(v);
                continue;
            }
            match task {
                TaskKind::Classification => {
                    if v < 0.0 || v.fract() != 0.0 {
                        return Err(cell_err(
                            row,
                            column,
                            format!("class label `{cell}` is not a non-negative integer"),
                        ));
                    }
                    class_labels.push(v as usize);
                }
                TaskKind::Regression => real_labels.push(v),
            }
        }
    }
    let labels = match task {
        TaskKind::Classification => Labels::Class(class_labels),
        TaskKind::Regression => Labels::Real(real_labels),
    };
    if labels.is_empty() {
        return Err(cell_err(1, "", "empty file: no data rows".into()));
    }
    Dataset::from_flat(features, names.len(), labels)?.with_feature_names(names)
}

/// Three-arm (or `classes`-arm) 2-D spiral.
///
/// For class `c` and index `i`: `r = i / points_per_class`,
/// `θ = 2π·c/classes + 3π·r + N(0, noise_std)`, point `(r sin θ, r cos θ)`.
/// Rows are class-major.
pub fn synth_spiral(
    points_per_class: usize,
    classes: usize,
    noise_std: f64,
    seed: u64,
) -> Result<Dataset> {
    if points_per_class < 1 {
        return Err(Error::invalid("points_per_class must be at least 1"));
    }
    if classes < 2 {
        return Err(Error::invalid("spiral needs at least 2 classes"));
    }
    let noise = Normal::new(0.0, noise_std)
        .map_err(|_| Error::invalid(format!("noise_std {noise_std} must be finite and >= 0")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = std::f64::consts::TAU;
    let mut rows = Vec::with_capacity(points_per_class * classes);
    let mut labels = Vec::with_capacity(points_per_class * classes);
    for c in 0..classes {
        for i in 0..points_per_class {
            let r = i as f64 / points_per_class as f64;
            let theta = tau * (c as f64 / classes as f64) + r * 1.5 * tau + rng.sample(noise);
            rows.push(vec![r * theta.sin(), r * theta.cos()]);
            labels.push(c);
        }
    }
    Dataset::from_rows(rows, Labels::Class(labels))
}

/// A synthetic uplink-throughput trace: piecewise rising, falling and flat
/// regimes with gaussian jitter, kept within `[0, peak]`.
pub fn synth_throughput(len: usize, peak: f64, seed: u64) -> Result<Vec<f64>> {
    if len == 0 {
        return Err(Error::invalid("series length must be positive"));
    }
    if !(peak.is_finite() && peak > 0.0) {
        return Err(Error::invalid("peak must be a positive finite value"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, 0.01 * peak).expect("finite std");
    let mut out = Vec::with_capacity(len);
    let mut level = rng.random_range(0.2..0.8) * peak;
    while out.len() < len {
        let seg_len = rng.random_range(8..40usize);
        let slope = match rng.random_range(0..3u8) {
            0 => rng.random_range(0.005..0.04) * peak,
            1 => -rng.random_range(0.005..0.04) * peak,
            _ => 0.0,
        };
        for _ in 0..seg_len {
            if out.len() == len {
                break;
            }
            level = (level + slope).clamp(0.0, peak);
            let v = (level + rng.sample(jitter)).clamp(0.0, peak);
            out.push(v);
        }
    }
    Ok(out)
}

/// Sliding-window regression rows: features `series[i-window..i]`, label
/// `series[i]`, for every `i` in `window..len`.
pub fn window_timeseries(series: &[f64], window: usize) -> Result<Dataset> {
    if window == 0 {
        return Err(Error::invalid("window must be at least 1"));
    }
    if series.len() <= window {
        return Err(Error::invalid(format!(
            "series of length {} is too short for window {window}",
            series.len()
        )));
    }
    let n = series.len() - window;
    let mut features = Vec::with_capacity(n * window);
    let mut labels = Vec::with_capacity(n);
    for i in window..series.len() {
        features.extend_from_slice(&series[i - window..i]);
        labels.push(series[i]);
    }
    let names = (0..window).map(|j| format!("x{j}")).collect();
    Dataset::from_flat(features, window, Labels::Real(labels))?.with_feature_names(names)
}

/// Bin index of `v` on a `[0, y_max]` scale split into `bins` equal parts.
/// Boundary values go to the higher bin; `y_max` itself clamps to the top.
pub fn bin_index(v: f64, y_max: f64, bins: usize) -> usize {
    let b = (bins as f64 * v / y_max).floor();
    if b <= 0.0 {
        0
    } else {
        (b as usize).min(bins - 1)
    }
}

/// Turns a regression dataset into a `bins`-class one by bucketing labels
/// into equal fractions of the label maximum. With `bin_features`, features
/// are bucketed on the same scale (they are assumed to share the label's
/// units, as in a windowed series) and become bin indices.
pub fn bin_labels(data: &Dataset, bins: usize, bin_features: bool) -> Result<Dataset> {
    let Labels::Real(ys) = data.labels() else {
        return Err(Error::TaskMismatch(
            "bin_labels needs a regression dataset".into(),
        ));
    };
    if bins < 2 {
        return Err(Error::invalid("bins must be at least 2"));
    }
    let y_max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if y_max <= 0.0 {
        return Err(Error::invalid(format!(
            "label maximum is {y_max}; binning needs a positive maximum"
        )));
    }
    let labels = Labels::Class(ys.iter().map(|&y| bin_index(y, y_max, bins)).collect());
    let features = if bin_features {
        data.features
            .iter()
            .map(|&x| bin_index(x, y_max, bins) as f64)
            .collect()
    } else {
        data.features.clone()
    };
    let mut out = Dataset::from_flat(features, data.n_features, labels)?;
    out.feature_names = data.feature_names.clone();
    Ok(out)
}
