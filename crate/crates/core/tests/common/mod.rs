#![allow(dead_code)]

use rand::Rng;
use specforge::dataset::Labels;
use specforge::verifier::Layer;
use specforge::{Dataset, Hyperrectangle, Label, Network, OutputConstraint, SpecSet, Specification, TaskKind};

/// Verdict from a plain double loop: 0 = FN, 1 = TP, 2 = FP.
pub fn naive_verdicts(specs: &[(Vec<f64>, Vec<f64>, OutputConstraint)], rows: &[Vec<f64>], labels: &[Label]) -> Vec<(u8, Vec<usize>)> {
    let mut out = Vec::new();
    for (x, y) in rows.iter().zip(labels) {
        let mut covering = Vec::new();
        let mut all_ok = true;
        for (j, (lo, hi, c)) in specs.iter().enumerate() {
            let mut inside = true;
            for d in 0..x.len() {
                if x[d] < lo[d] || x[d] > hi[d] {
                    inside = false;
                }
            }
            if !inside {
                continue;
            }
            covering.push(j);
            let ok = match (c, y) {
                (OutputConstraint::ClassLabel(k), Label::Class(l)) => k == l,
                (OutputConstraint::Interval { lo, hi }, Label::Real(v)) => lo <= v && v <= hi,
                _ => panic!("task mismatch in oracle"),
            };
            if !ok {
                all_ok = false;
            }
        }
        let v = if covering.is_empty() {
            0
        } else if all_ok {
            1
        } else {
            2
        };
        out.push((v, covering));
    }
    out
}

/// Random classification or regression instance on a small integer lattice
/// so boxes overlap and points land on faces often.
pub struct Instance {
    pub task: TaskKind,
    pub raw_specs: Vec<(Vec<f64>, Vec<f64>, OutputConstraint)>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
}

impl Instance {
    pub fn random(rng: &mut impl Rng, max_points: usize, max_specs: usize) -> Instance {
        let dim = rng.random_range(1..=3);
        let task = if rng.random_bool(0.5) { TaskKind::Classification } else { TaskKind::Regression };
        let n = rng.random_range(1..=max_points);
        let m = rng.random_range(0..=max_specs);
        let coord = |rng: &mut dyn rand::RngCore| rng.random_range(0..=10) as f64 / 2.0;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| coord(rng)).collect()).collect();
        let labels: Vec<Label> = (0..n)
            .map(|_| match task {
                TaskKind::Classification => Label::Class(rng.random_range(0..3)),
                TaskKind::Regression => Label::Real(rng.random_range(0..=20) as f64 / 4.0),
            })
            .collect();
        let raw_specs = (0..m)
            .map(|_| {
                let mut lo = Vec::new();
                let mut hi = Vec::new();
                for _ in 0..dim {
                    let a = coord(rng);
                    let b = coord(rng);
                    let (mut l, mut h) = (a.min(b), a.max(b));
                    if rng.random_bool(0.1) {
                        l = f64::NEG_INFINITY;
                    }
                    if rng.random_bool(0.1) {
                        h = f64::INFINITY;
                    }
                    lo.push(l);
                    hi.push(h);
                }
                let out = match task {
                    TaskKind::Classification => OutputConstraint::ClassLabel(rng.random_range(0..3)),
                    TaskKind::Regression => {
                        let a = rng.random_range(0..=20) as f64 / 4.0;
                        let w = rng.random_range(0..=8) as f64 / 4.0;
                        OutputConstraint::interval(a, a + w).unwrap()
                    }
                };
                (lo, hi, out)
            })
            .collect();
        Instance {
            task,
            raw_specs,
            rows,
            labels,
        }
    }

    pub fn spec_set(&self) -> SpecSet {
        let mut set = SpecSet::new(self.task, self.rows[0].len(), "random");
        for (i, (lo, hi, out)) in self.raw_specs.iter().enumerate() {
            set.push(Specification {
                input: Hyperrectangle::new(lo.clone(), hi.clone()).unwrap(),
                output: *out,
                provenance: format!("r{i}"),
            })
            .unwrap();
        }
        set
    }

    pub fn dataset(&self) -> Dataset {
        let labels = match self.task {
            TaskKind::Classification => Labels::Class(self.labels.iter().map(|l| l.as_f64() as usize).collect()),
            TaskKind::Regression => Labels::Real(self.labels.iter().map(Label::as_f64).collect()),
        };
        Dataset::from_rows(self.rows.clone(), labels).unwrap()
    }
}

/// Random ReLU network with 1..=4 layers of width at most 16.
pub fn random_net(rng: &mut impl Rng, in_dim: usize, out_dim: usize) -> Network {
    let depth = rng.random_range(1..=4);
    let mut layers = Vec::new();
    let mut width = in_dim;
    for l in 0..depth {
        let last = l + 1 == depth;
        let next = if last { out_dim } else { rng.random_range(1..=16) };
        let weights = (0..next)
            .map(|_| (0..width).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let bias = (0..next).map(|_| rng.random_range(-1.0..1.0)).collect();
        layers.push(Layer { weights, bias, relu: !last });
        width = next;
    }
    Network::new(layers).unwrap()
}

pub fn random_box(rng: &mut impl Rng, dim: usize) -> Hyperrectangle {
    let mut lo = Vec::with_capacity(dim);
    let mut hi = Vec::with_capacity(dim);
    for _ in 0..dim {
        let c: f64 = rng.random_range(-3.0..3.0);
        let r: f64 = rng.random_range(0.0..1.5);
        lo.push(c - r);
        hi.push(c + r);
    }
    Hyperrectangle::new(lo, hi).unwrap()
}

pub fn sample_in(rng: &mut impl Rng, b: &Hyperrectangle) -> Vec<f64> {
    b.lower()
        .iter()
        .zip(b.upper())
        .map(|(&l, &h)| if l == h { l } else { rng.random_range(l..=h) })
        .collect()
}
