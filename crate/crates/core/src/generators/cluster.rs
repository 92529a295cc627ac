use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::spec::{extract_from_candidates, Hyperrectangle, SpecSet};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterParams {
    pub k: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            k: 30,
            max_iters: 300,
            seed: 0,
        }
    }
}

/// Result of a k-means run.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    /// Cluster id per input row.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances to the assigned centroid.
    pub inertia: f64,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd's algorithm from k-means++ seeding.
///
/// `features` is row-major with `dim` columns. Stops when assignments are
/// stable or after `max_iters` rounds. A cluster that empties out is
/// re-seeded with the point farthest from its own centroid.
pub fn kmeans(features: &[f64], dim: usize, params: &ClusterParams) -> Result<KMeans> {
    if dim == 0 || !features.len().is_multiple_of(dim) {
        return Err(Error::invalid("feature buffer is not a whole number of rows"));
    }
    let points: Vec<&[f64]> = features.chunks_exact(dim).collect();
    let n = points.len();
    let k = params.k;
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} must lie in 1..={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    // k-means++ seeding
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)].to_vec());
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            // float drift can walk past the end; take the last weighted point
            if d2[chosen] == 0.0 {
                chosen = d2.iter().rposition(|&w| w > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick].to_vec();
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &c));
        }
        centroids.push(c);
    }

    let mut assignments = vec![usize::MAX; n];
    let mut iterations = 0;
    while iterations < params.max_iters {
        iterations += 1;
        let next: Vec<usize> = points.par_iter().map(|p| nearest(p, &centroids).0).collect();
        if next == assignments {
            break;
        }
        assignments = next;

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p.iter()) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let (far, _) = points
                .iter()
                .zip(&assignments)
                .enumerate()
                .filter(|&(_, (_, &a))| counts[a] > 1)
                .map(|(i, (p, &a))| (i, sq_dist(p, &centroids[a])))
                .fold((usize::MAX, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if far == usize::MAX {
                continue;
            }
            counts[assignments[far]] -= 1;
            assignments[far] = c;
            counts[c] = 1;
            centroids[c] = points[far].to_vec();
        }
    }

    let inertia = points
        .iter()
        .zip(&assignments)
        .map(|(p, &a)| sq_dist(p, &centroids[a]))
        .sum();
    Ok(KMeans {
        assignments,
        centroids,
        inertia,
        iterations,
    })
}

/// Clustering-based generation: one box per k-means cluster, spanning the
/// extremes of its members. Extraction then sees every generation point in
/// the box, members or not, so overlapping boxes share points.
pub fn gen_cluster(gen: &Dataset, params: &ClusterParams) -> Result<SpecSet> {
    let dim = gen.n_features();
    let flat: Vec<f64> = gen.rows().flatten().copied().collect();
    let km = kmeans(&flat, dim, params)?;

    let mut lower = vec![vec![f64::INFINITY; dim]; params.k];
    let mut upper = vec![vec![f64::NEG_INFINITY; dim]; params.k];
    for (row, &c) in gen.rows().zip(&km.assignments) {
        for j in 0..dim {
            lower[c][j] = lower[c][j].min(row[j]);
            upper[c][j] = upper[c][j].max(row[j]);
        }
    }

    let specs: Vec<_> = (0..params.k)
        .into_par_iter()
        .filter(|&c| lower[c][0] <= upper[c][0])
        .map(|c| {
            let region = Hyperrectangle::new(lower[c].clone(), upper[c].clone())?;
            Ok(extract_from_candidates(&region, gen, 0..gen.len(), format!("cluster:id={c}")))
        })
        .collect::<Result<_>>()?;

    let mut set = SpecSet::new(gen.task(), dim, "cluster")
        .with_param("k", params.k)
        .with_param("max_iters", params.max_iters)
        .with_param("seed", params.seed)
        .with_param("init", "k-means++")
        .with_param("iterations", km.iterations);
    for spec in specs.into_iter().flatten() {
        set.push(spec)?;
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_spiral, Labels};
    use crate::spec::OutputConstraint;

    fn flat(rows: &[[f64; 2]]) -> Vec<f64> {
        rows.iter().flatten().copied().collect()
    }

    #[test]
    fn separates_two_groups() {
        let pts = flat(&[[0.0, 0.0], [0.1, 0.2], [0.2, 0.1], [10.0, 10.0], [10.1, 9.9], [9.8, 10.2]]);
        for seed in 0..5 {
            let km = kmeans(&pts, 2, &ClusterParams { k: 2, max_iters: 100, seed }).unwrap();
            let a = &km.assignments;
            assert!(a[0] == a[1] && a[1] == a[2]);
            assert!(a[3] == a[4] && a[4] == a[5]);
            assert_ne!(a[0], a[3]);
        }
    }

    #[test]
    fn k_equals_n_has_zero_inertia() {
        let pts = flat(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [5.0, 5.0]]);
        let km = kmeans(&pts, 2, &ClusterParams { k: 4, max_iters: 50, seed: 3 }).unwrap();
        assert_eq!(km.inertia, 0.0);
        let mut ids = km.assignments.clone();
        ids.sort_unstable();
        assert_eq!(ids, vec![0, 1, 2, 3]);
    }

    #[test]
    fn deterministic_under_seed() {
        let d = synth_spiral(100, 3, 0.2, 1).unwrap();
        let flat: Vec<f64> = d.rows().flatten().copied().collect();
        let p = ClusterParams { k: 10, max_iters: 100, seed: 42 };
        assert_eq!(kmeans(&flat, 2, &p).unwrap(), kmeans(&flat, 2, &p).unwrap());
    }

    #[test]
    fn rejects_bad_k() {
        let pts = flat(&[[0.0, 0.0], [1.0, 1.0]]);
        assert!(kmeans(&pts, 2, &ClusterParams { k: 3, ..Default::default() }).is_err());
        assert!(kmeans(&pts, 2, &ClusterParams { k: 0, ..Default::default() }).is_err());
    }

    #[test]
    fn singleton_cluster_box_is_the_point() {
        let d = Dataset::from_rows(
            vec![vec![0.0, 0.0], vec![0.1, 0.0], vec![50.0, 50.0]],
            Labels::Real(vec![1.0, 3.0, 7.5]),
        )
        .unwrap();
        let set = gen_cluster(&d, &ClusterParams { k: 2, max_iters: 50, seed: 0 }).unwrap();
        let single = set
            .specs()
            .iter()
            .find(|s| s.input.lower() == [50.0, 50.0])
            .expect("singleton cluster spec");
        assert_eq!(single.input.upper(), &[50.0, 50.0]);
        assert_eq!(single.output, OutputConstraint::Interval { lo: 7.5, hi: 7.5 });
    }
}
