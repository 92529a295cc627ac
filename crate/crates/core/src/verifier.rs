//! Checking feedforward ReLU networks against specifications.
//!
//! Bounds come from interval bound propagation (IBP): each affine layer maps
//! a box to a box by splitting weights into their positive and negative
//! parts, and ReLU clamps both ends at zero. IBP is sound but loose, so a
//! spec it cannot prove goes to a falsification pass that evaluates the
//! network on evaluation points inside the box and on uniform samples. The
//! outcome is one of [`VerifyResult::Verified`], [`VerifyResult::Violated`]
//! (with concrete counterexamples) or [`VerifyResult::Unknown`].

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetStats};
use crate::error::{Error, Result};
use crate::spec::{Hyperrectangle, OutputConstraint, SpecSet, Specification};

/// Fraction of the observed feature range added on each side when an
/// infinite box side is clamped.
pub const CLAMP_MARGIN: f64 = 0.1;

/// `y = W·x + b`, optionally followed by ReLU. `weights[i][j]` multiplies
/// input `j` into output `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub relu: bool,
}

impl Layer {
    pub fn input_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn output_dim(&self) -> usize {
        self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Network {
    layers: Vec<Layer>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    layers: Vec<Layer>,
}

impl<'de> Deserialize<'de> for Network {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = NetworkFile::deserialize(d)?;
        Network::new(file.layers).map_err(serde::de::Error::custom)
    }
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("network has no layers"));
        }
        let mut width = layers[0].input_dim();
        if width == 0 {
            return Err(Error::invalid("layer 0 has no inputs"));
        }
        for (l, layer) in layers.iter().enumerate() {
            if layer.weights.len() != layer.bias.len() {
                return Err(Error::dim(
                    format!("layer {l} bias length vs weight rows"),
                    layer.weights.len(),
                    layer.bias.len(),
                ));
            }
            if layer.bias.is_empty() {
                return Err(Error::invalid(format!("layer {l} has no outputs")));
            }
            for (i, row) in layer.weights.iter().enumerate() {
                if row.len() != width {
                    return Err(Error::dim(format!("layer {l} weight row {i}"), width, row.len()));
                }
            }
            let finite = layer.weights.iter().flatten().chain(&layer.bias).all(|v| v.is_finite());
            if !finite {
                return Err(Error::invalid(format!("layer {l} has a non-finite parameter")));
            }
            width = layer.output_dim();
        }
        if layers.last().is_some_and(|l| l.relu) {
            return Err(Error::invalid("final layer must not apply ReLU"));
        }
        Ok(Network { layers })
    }

    /// Single linear layer computing `x ↦ x`.
    pub fn identity(dim: usize) -> Self {
        let weights = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Network {
            layers: vec![Layer {
                weights,
                bias: vec![0.0; dim],
                relu: false,
            }],
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Layer::output_dim)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::dim("network input", self.input_dim(), x.len()));
        }
        Ok(self.forward_unchecked(x))
    }

    fn forward_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        for layer in &self.layers {
            h = layer
                .weights
                .iter()
                .zip(&layer.bias)
                .map(|(row, &b)| {
                    let mut acc = b;
                    for (w, v) in row.iter().zip(&h) {
                        acc += w * v;
                    }
                    if layer.relu {
                        acc.max(0.0)
                    } else {
                        acc
                    }
                })
                .collect();
        }
        h
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format {
            path: "<memory>".into(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Per-output lower/upper bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalVector {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl IntervalVector {
    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.len() == self.len()
            && y.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    /// True if every interval of `self` lies inside the matching one of `other`.
    pub fn is_subset_of(&self, other: &IntervalVector) -> bool {
        self.len() == other.len()
            && (0..self.len()).all(|i| other.lower[i] <= self.lower[i] && self.upper[i] <= other.upper[i])
    }
}

/// Sound output bounds of `net` over a finite `region`.
///
/// The accumulation order matches [`Network::forward`], so a degenerate box
/// reproduces the forward pass exactly and rounding never lets a forward
/// output escape the bounds.
pub fn ibp_bounds(net: &Network, region: &Hyperrectangle) -> Result<IntervalVector> {
    if region.dim() != net.input_dim() {
        return Err(Error::dim("box vs network input", net.input_dim(), region.dim()));
    }
    if let Some(dim) = (0..region.dim())
        .find(|&j| !(region.lower()[j].is_finite() && region.upper()[j].is_finite()))
    {
        return Err(Error::UnboundedBox { dim });
    }
    let mut lo = region.lower().to_vec();
    let mut hi = region.upper().to_vec();
    for layer in net.layers() {
        let mut next_lo = Vec::with_capacity(layer.output_dim());
        let mut next_hi = Vec::with_capacity(layer.output_dim());
        for (row, &b) in layer.weights.iter().zip(&layer.bias) {
            let (mut l, mut u) = (b, b);
            for (j, &w) in row.iter().enumerate() {
                if w >= 0.0 {
                    l += w * lo[j];
                    u += w * hi[j];
                } else {
                    l += w * hi[j];
                    u += w * lo[j];
                }
            }
            if layer.relu {
                l = l.max(0.0);
                u = u.max(0.0);
            }
            next_lo.push(l);
            next_hi.push(u);
        }
        lo = next_lo;
        hi = next_hi;
    }
    Ok(IntervalVector { lower: lo, upper: hi })
}

/// Falsification settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampler {
    /// Uniform samples drawn per spec.
    pub budget: usize,
    pub seed: u64,
    /// Counterexamples kept per spec; the search stops once this many are found.
    pub max_counterexamples: usize,
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler {
            budget: 10_000,
            seed: 0,
            max_counterexamples: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterexampleSource {
    /// Row of the supplied evaluation dataset.
    Dataset { row: usize },
    /// Uniform sample from the (clamped) spec box.
    Sample,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub input: Vec<f64>,
    pub output: Vec<f64>,
    pub expected: OutputConstraint,
    pub source: CounterexampleSource,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum VerifyResult {
    Verified,
    Violated { counterexamples: Vec<Counterexample> },
    Unknown { output_bounds: IntervalVector },
}

impl VerifyResult {
    pub fn is_verified(&self) -> bool {
        matches!(self, VerifyResult::Verified)
    }

    pub fn is_violated(&self) -> bool {
        matches!(self, VerifyResult::Violated { .. })
    }
}

/// Outcome for one spec with the context needed to interpret it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecVerification {
    pub spec_index: usize,
    pub provenance: String,
    pub result: VerifyResult,
    /// IBP bounds over the box that was analysed.
    pub bounds: IntervalVector,
    /// Whether infinite sides were clamped; `Verified` then covers only the
    /// clamped box.
    pub clamped: bool,
    pub analysed_box: (Vec<f64>, Vec<f64>),
}

/// Index of the first maximal entry.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Whether a network output meets `constraint` (class via argmax).
pub fn output_satisfies(constraint: &OutputConstraint, output: &[f64]) -> bool {
    match *constraint {
        OutputConstraint::ClassLabel(c) => argmax(output) == c,
        OutputConstraint::Interval { lo, hi } => lo <= output[0] && output[0] <= hi,
    }
}

fn check_compat(net: &Network, spec: &Specification) -> Result<()> {
    if spec.input.dim() != net.input_dim() {
        return Err(Error::dim("spec box vs network input", net.input_dim(), spec.input.dim()));
    }
    match spec.output {
        OutputConstraint::Interval { .. } if net.output_dim() != 1 => {
            Err(Error::dim("network outputs for an interval spec", 1, net.output_dim()))
        }
        OutputConstraint::ClassLabel(c) if c >= net.output_dim() => Err(Error::dim(
            format!("network outputs for class {c}"),
            c + 1,
            net.output_dim(),
        )),
        _ => Ok(()),
    }
}

/// Clamps infinite sides to the observed feature range widened by
/// [`CLAMP_MARGIN`] on each side.
pub fn clamp_to_stats(region: &Hyperrectangle, stats: Option<&DatasetStats>) -> Result<(Hyperrectangle, bool)> {
    if region.is_bounded() {
        return Ok((region.clone(), false));
    }
    let Some(stats) = stats else {
        let dim = (0..region.dim())
            .find(|&j| !(region.lower()[j].is_finite() && region.upper()[j].is_finite()))
            .unwrap_or(0);
        return Err(Error::UnboundedBox { dim });
    };
    if stats.n_features() != region.dim() {
        return Err(Error::dim("dataset stats vs spec box", region.dim(), stats.n_features()));
    }
    let margin: Vec<f64> = stats
        .x_min
        .iter()
        .zip(&stats.x_max)
        .map(|(lo, hi)| CLAMP_MARGIN * (hi - lo))
        .collect();
    let lo: Vec<f64> = stats.x_min.iter().zip(&margin).map(|(v, m)| v - m).collect();
    let hi: Vec<f64> = stats.x_max.iter().zip(&margin).map(|(v, m)| v + m).collect();
    Ok((region.clamp_infinite(&lo, &hi)?, true))
}

fn proven(bounds: &IntervalVector, constraint: &OutputConstraint) -> bool {
    match *constraint {
        OutputConstraint::Interval { lo, hi } => lo <= bounds.lower[0] && bounds.upper[0] <= hi,
        OutputConstraint::ClassLabel(c) => (0..bounds.len())
            .filter(|&j| j != c)
            .all(|j| bounds.lower[c] > bounds.upper[j]),
    }
}

/// Verifies one spec. `eval` supplies extra falsification candidates (its
/// rows inside the spec box); `stats` bounds any infinite box sides.
pub fn verify_spec(
    net: &Network,
    spec: &Specification,
    stats: Option<&DatasetStats>,
    eval: Option<&Dataset>,
    sampler: &Sampler,
) -> Result<SpecVerification> {
    verify_indexed(net, spec, 0, stats, eval, sampler)
}

fn verify_indexed(
    net: &Network,
    spec: &Specification,
    index: usize,
    stats: Option<&DatasetStats>,
    eval: Option<&Dataset>,
    sampler: &Sampler,
) -> Result<SpecVerification> {
    check_compat(net, spec)?;
    if let Some(d) = eval {
        if d.n_features() != net.input_dim() {
            return Err(Error::dim("evaluation features vs network input", net.input_dim(), d.n_features()));
        }
    }
    let (region, clamped) = clamp_to_stats(&spec.input, stats)?;
    let bounds = ibp_bounds(net, &region)?;
    let done = |result| SpecVerification {
        spec_index: index,
        provenance: spec.provenance.clone(),
        result,
        bounds: bounds.clone(),
        clamped,
        analysed_box: (region.lower().to_vec(), region.upper().to_vec()),
    };
    if proven(&bounds, &spec.output) {
        return Ok(done(VerifyResult::Verified));
    }

    let mut found = Vec::new();
    let check = |x: Vec<f64>, source| {
        let y = net.forward_unchecked(&x);
        let ok = output_satisfies(&spec.output, &y);
        (!ok).then_some(Counterexample {
            input: x,
            output: y,
            expected: spec.output,
            source,
        })
    };
    if let Some(d) = eval {
        for (row, x) in d.rows().enumerate() {
            if found.len() >= sampler.max_counterexamples {
                break;
            }
            if spec.input.contains_unchecked(x) {
                found.extend(check(x.to_vec(), CounterexampleSource::Dataset { row }));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec_seed(sampler.seed, index));
    for _ in 0..sampler.budget {
        if found.len() >= sampler.max_counterexamples {
            break;
        }
        let x: Vec<f64> = region
            .lower()
            .iter()
            .zip(region.upper())
            .map(|(&lo, &hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect();
        found.extend(check(x, CounterexampleSource::Sample));
    }

    Ok(done(if found.is_empty() {
        VerifyResult::Unknown {
            output_bounds: bounds.clone(),
        }
    } else {
        VerifyResult::Violated {
            counterexamples: found,
        }
    }))
}

/// Per-spec RNG stream, independent of scheduling order.
fn spec_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySummary {
    pub verified: usize,
    pub violated: usize,
    pub unknown: usize,
    pub results: Vec<SpecVerification>,
}

impl VerifySummary {
    /// Every counterexample with the provenance of the spec it breaks.
    pub fn counterexamples(&self) -> impl Iterator<Item = (&SpecVerification, &Counterexample)> {
        self.results.iter().flat_map(|r| match &r.result {
            VerifyResult::Violated { counterexamples } => counterexamples.iter().map(move |c| (r, c)).collect(),
            _ => Vec::new(),
        })
    }
}

/// Runs [`verify_spec`] over the whole set. Results keep spec order and do
/// not depend on thread scheduling.
pub fn verify_all(
    net: &Network,
    set: &SpecSet,
    stats: Option<&DatasetStats>,
    eval: Option<&Dataset>,
    sampler: &Sampler,
) -> Result<VerifySummary> {
    let results: Vec<SpecVerification> = set
        .specs()
        .par_iter()
        .enumerate()
        .map(|(i, spec)| verify_indexed(net, spec, i, stats, eval, sampler))
        .collect::<Result<_>>()?;
    let count = |f: fn(&VerifyResult) -> bool| results.iter().filter(|r| f(&r.result)).count();
    Ok(VerifySummary {
        verified: count(VerifyResult::is_verified),
        violated: count(VerifyResult::is_violated),
        unknown: count(|r| matches!(r, VerifyResult::Unknown { .. })),
        results,
    })
}
