use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::spec::{extract_from_candidates, Hyperrectangle, SpecSet};

/// Upper limit on enumerated grid cells unless overridden.
pub const DEFAULT_CELL_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GridParams {
    /// Cells per feature.
    pub beta: usize,
    pub cell_cap: u64,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            beta: 10,
            cell_cap: DEFAULT_CELL_CAP,
        }
    }
}

/// One axis of the grid.
#[derive(Debug, Clone, PartialEq)]
struct Axis {
    min: f64,
    max: f64,
    step: f64,
    cells: usize,
}

impl Axis {
    fn lo(&self, p: usize) -> f64 {
        self.min + p as f64 * self.step
    }

    // The last cell ends exactly at the data maximum.
    fn hi(&self, p: usize) -> f64 {
        if p + 1 == self.cells {
            self.max
        } else {
            self.min + (p + 1) as f64 * self.step
        }
    }

    /// Cells whose closed extent holds `x` (one, or two on a shared face).
    fn cells_of(&self, x: f64) -> impl Iterator<Item = usize> + '_ {
        let guess = if self.step > 0.0 {
            ((x - self.min) / self.step).floor().max(0.0) as usize
        } else {
            0
        };
        let guess = guess.min(self.cells - 1);
        (guess.saturating_sub(1)..=(guess + 1).min(self.cells - 1))
            .filter(move |&p| self.lo(p) <= x && x <= self.hi(p))
    }
}

/// Cell geometry of a fixed-size grid over a bounding box.
///
/// Each feature range `[min, max]` is cut into `beta` equal slabs (step
/// `(max − min)/beta`); a constant feature keeps a single slab. Cells are
/// addressed by one slab index per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLayout {
    axes: Vec<Axis>,
    beta: usize,
}

impl GridLayout {
    /// Lays out the grid over `[x_min, x_max]`, refusing more than
    /// `cell_cap` cells.
    pub fn new(x_min: &[f64], x_max: &[f64], beta: usize, cell_cap: u64) -> Result<Self> {
        if beta < 1 {
            return Err(Error::invalid("beta must be at least 1"));
        }
        if x_min.len() != x_max.len() {
            return Err(Error::dim("grid bounds", x_min.len(), x_max.len()));
        }
        let axes: Vec<Axis> = x_min
            .iter()
            .zip(x_max)
            .map(|(&min, &max)| Axis {
                min,
                max,
                step: (max - min) / beta as f64,
                cells: if max > min { beta } else { 1 },
            })
            .collect();
        let active = axes.iter().filter(|a| a.cells > 1).count();
        let total = axes
            .iter()
            .try_fold(1u64, |acc, a| acc.checked_mul(a.cells as u64));
        if total.is_none_or(|t| t > cell_cap) {
            return Err(Error::CellCapExceeded {
                beta,
                dims: axes.len(),
                cells: format!("{beta}^{active}"),
                cap: cell_cap,
            });
        }
        Ok(GridLayout { axes, beta })
    }

    pub fn beta(&self) -> usize {
        self.beta
    }

    /// Slab count per feature.
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.cells).collect()
    }

    pub fn n_cells(&self) -> usize {
        self.axes.iter().map(|a| a.cells).product()
    }

    /// Closed box of the cell at `key`.
    pub fn cell_box(&self, key: &[usize]) -> Result<Hyperrectangle> {
        if key.len() != self.axes.len() {
            return Err(Error::dim("grid cell key", self.axes.len(), key.len()));
        }
        if let Some(j) = key.iter().zip(&self.axes).position(|(&p, a)| p >= a.cells) {
            return Err(Error::invalid(format!("cell index {} out of range on feature {j}", key[j])));
        }
        let lower = key.iter().zip(&self.axes).map(|(&p, a)| a.lo(p)).collect();
        let upper = key.iter().zip(&self.axes).map(|(&p, a)| a.hi(p)).collect();
        Hyperrectangle::new(lower, upper)
    }

    /// Every cell key in lexicographic order (first feature outermost).
    pub fn cells(&self) -> Vec<Vec<usize>> {
        let ranges: Vec<Vec<usize>> = self.axes.iter().map(|a| (0..a.cells).collect()).collect();
        cartesian(&ranges)
    }

    /// Keys of all cells whose closed box holds `x`, in lexicographic order.
    /// Empty when `x` lies outside the bounding box.
    pub fn cells_of(&self, x: &[f64]) -> Vec<Vec<usize>> {
        let per_axis: Vec<Vec<usize>> = self
            .axes
            .iter()
            .zip(x)
            .map(|(a, &v)| a.cells_of(v).collect())
            .collect();
        if per_axis.iter().any(Vec::is_empty) {
            return Vec::new();
        }
        cartesian(&per_axis)
    }
}

/// Fixed-size grid generation over the generation bounding box (see
/// [`GridLayout`]). Every non-empty cell yields one spec. Points on a shared
/// face belong to both neighbouring cells.
pub fn gen_grid(gen: &Dataset, params: &GridParams) -> Result<SpecSet> {
    let stats = gen.stats();
    let layout = GridLayout::new(&stats.x_min, &stats.x_max, params.beta, params.cell_cap)?;

    // Bucket rows by every cell that holds them; BTreeMap keeps the
    // lexicographic cell order.
    let mut buckets: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (i, row) in gen.rows().enumerate() {
        for key in layout.cells_of(row) {
            buckets.entry(key).or_default().push(i);
        }
    }

    let cells: Vec<(Vec<usize>, Vec<usize>)> = buckets.into_iter().collect();
    let specs: Vec<_> = cells
        .into_par_iter()
        .map(|(key, rows)| {
            let cell = layout.cell_box(&key)?;
            let tag = key.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
            Ok(extract_from_candidates(&cell, gen, rows, format!("grid:cell={tag}")))
        })
        .collect::<Result<_>>()?;

    let mut set = SpecSet::new(gen.task(), gen.n_features(), "grid")
        .with_param("beta", params.beta)
        .with_param("cell_cap", params.cell_cap);
    for spec in specs.into_iter().flatten() {
        set.push(spec)?;
    }
    Ok(set)
}

fn cartesian(choices: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(choices.len())];
    for opts in choices {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                opts.iter().map(move |&p| {
                    let mut next = prefix.clone();
                    next.push(p);
                    next
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_spiral, Labels};
    use crate::spec::OutputConstraint;
    use crate::TaskKind;

    #[test]
    fn beta_one_is_bounding_box_majority() {
        let d = Dataset::from_rows(
            vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![0.5, 1.0]],
            Labels::Class(vec![1, 1, 0]),
        )
        .unwrap();
        let set = gen_grid(&d, &GridParams { beta: 1, ..Default::default() }).unwrap();
        assert_eq!(set.len(), 1);
        let s = &set.specs()[0];
        assert_eq!(s.input.lower(), &[0.0, 0.0]);
        assert_eq!(s.input.upper(), &[1.0, 2.0]);
        assert_eq!(s.output, OutputConstraint::ClassLabel(1));
    }

    #[test]
    fn spiral_beta_ten() {
        let d = synth_spiral(300, 3, 0.2, 3).unwrap();
        let set = gen_grid(&d, &GridParams::default()).unwrap();
        assert!(!set.is_empty() && set.len() <= 100);
        assert!(set.specs().iter().all(|s| matches!(s.output, OutputConstraint::ClassLabel(_))));
        assert_eq!(set.task(), TaskKind::Classification);
    }

    #[test]
    fn shared_face_point_lands_in_both_cells() {
        // step 0.5 on [0, 1]: x = 0.5 sits on the face between cells 0 and 1
        let d = Dataset::from_rows(
            vec![vec![0.0], vec![0.5], vec![1.0]],
            Labels::Class(vec![0, 1, 2]),
        )
        .unwrap();
        let set = gen_grid(&d, &GridParams { beta: 2, ..Default::default() }).unwrap();
        assert_eq!(set.len(), 2);
        // cell 0 holds {0, 0.5} -> tie -> class 0; cell 1 holds {0.5, 1} -> class 1
        assert_eq!(set.specs()[0].output, OutputConstraint::ClassLabel(0));
        assert_eq!(set.specs()[1].output, OutputConstraint::ClassLabel(1));
    }

    #[test]
    fn constant_feature_collapses() {
        let d = Dataset::from_rows(
            vec![vec![0.0, 3.0], vec![1.0, 3.0]],
            Labels::Real(vec![1.0, 2.0]),
        )
        .unwrap();
        let set = gen_grid(&d, &GridParams::default()).unwrap();
        assert_eq!(set.len(), 2);
        for s in set.specs() {
            assert_eq!((s.input.lower()[1], s.input.upper()[1]), (3.0, 3.0));
        }
    }

    #[test]
    fn high_dimension_hits_cap() {
        let rows = (0..4).map(|i| (0..78).map(|j| (i * j) as f64).collect()).collect();
        let d = Dataset::from_rows(rows, Labels::Class(vec![0, 1, 0, 1])).unwrap();
        let err = gen_grid(&d, &GridParams::default()).unwrap_err();
        assert!(matches!(err, Error::CellCapExceeded { ref cells, .. } if cells == "10^77"));
    }

    #[test]
    fn cap_is_configurable() {
        let d = synth_spiral(20, 3, 0.2, 3).unwrap();
        assert!(gen_grid(&d, &GridParams { beta: 10, cell_cap: 99 }).is_err());
        assert!(gen_grid(&d, &GridParams { beta: 10, cell_cap: 100 }).is_ok());
    }
}
