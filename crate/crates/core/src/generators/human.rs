//! Hand-written throughput rules used as a baseline.
//!
//! Inputs are windows of four binned throughput values. Two rules apply:
//! a strictly monotonic window continues its least-squares trend one step
//! ahead, and a constant window predicts the same bin.

use crate::dataset::TaskKind;
use crate::error::{Error, Result};
use crate::spec::{Hyperrectangle, OutputConstraint, SpecSet, Specification};

/// History length the rules look at.
pub const HUMAN_WINDOW: usize = 4;

/// Least-squares line through `(i, values[i])`, evaluated at
/// `i = values.len()`, as an exact fraction `(numerator, denominator)` with
/// a positive denominator.
pub fn ols_extrapolate(values: &[i64]) -> (i64, i64) {
    let n = values.len() as i64;
    assert!(n >= 2, "need at least two points to fit a line");
    let sum_i: i64 = (0..n).sum();
    let sum_ii: i64 = (0..n).map(|i| i * i).sum();
    let sum_y: i64 = values.iter().sum();
    let sum_iy: i64 = values.iter().zip(0..n).map(|(y, i)| i * y).sum();
    let s = n * sum_ii - sum_i * sum_i;
    let slope_num = n * sum_iy - sum_i * sum_y;
    // prediction = ȳ + slope·(n − ī)
    (sum_y * s + n * slope_num * n - slope_num * sum_i, n * s)
}

/// `num/den` rounded to the nearest integer, ties to even.
fn round_half_even(num: i64, den: i64) -> i64 {
    debug_assert!(den > 0);
    let q = num.div_euclid(den);
    let r = num.rem_euclid(den);
    match (2 * r).cmp(&den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => q + (q & 1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Trend {
    Increasing,
    Decreasing,
    Stable,
}

fn trend(window: &[i64]) -> Option<Trend> {
    let pairs = || window.windows(2);
    if pairs().all(|w| w[0] < w[1]) {
        Some(Trend::Increasing)
    } else if pairs().all(|w| w[0] > w[1]) {
        Some(Trend::Decreasing)
    } else if pairs().all(|w| w[0] == w[1]) {
        Some(Trend::Stable)
    } else {
        None
    }
}

/// Enumerates every `bins^4` window of bin indices and emits a spec for each
/// monotonic or stable one. Input boxes are `[v − 0.5, v + 0.5]` per feature,
/// so each box holds exactly one integer bin tuple.
pub fn gen_human_throughput(bins: usize) -> Result<SpecSet> {
    if bins < 2 {
        return Err(Error::invalid("bins must be at least 2"));
    }
    let top = bins as i64 - 1;
    let mut set = SpecSet::new(TaskKind::Classification, HUMAN_WINDOW, "human")
        .with_param("bins", bins)
        .with_param("window", HUMAN_WINDOW)
        .with_param("rounding", "half-even");
    let total = bins.pow(HUMAN_WINDOW as u32);
    let mut window = [0i64; HUMAN_WINDOW];
    for code in 0..total {
        let mut rest = code;
        for slot in window.iter_mut().rev() {
            *slot = (rest % bins) as i64;
            rest /= bins;
        }
        let (label, tag) = match trend(&window) {
            Some(Trend::Stable) => (window[0], "stable"),
            Some(t) => {
                let (num, den) = ols_extrapolate(&window);
                let tag = if t == Trend::Increasing { "increasing" } else { "decreasing" };
                (round_half_even(num, den).clamp(0, top), tag)
            }
            None => continue,
        };
        let lower = window.iter().map(|&v| v as f64 - 0.5).collect();
        let upper = window.iter().map(|&v| v as f64 + 0.5).collect();
        set.push(Specification {
            input: Hyperrectangle::new(lower, upper)?,
            output: OutputConstraint::ClassLabel(label as usize),
            provenance: format!("human:{tag}={window:?}"),
        })?;
    }
    Ok(set)
}
