mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specforge::dataset::Labels;
use specforge::evaluation::score;
use specforge::generators::{gen_grid, gen_tree, GridLayout, GridParams, TreeParams};
use specforge::spec::filter_unbounded;
use specforge::verifier::{ibp_bounds, verify_spec, Sampler};
use specforge::{Dataset, DatasetStats, Hyperrectangle, OutputConstraint, SpecSet, Specification, TaskKind, Verdict};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_is_a_partition(n in 2usize..80, frac in 0.05f64..0.95, seed: u64) {
        // the label carries the original row id
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![(i % 7) as f64]).collect();
        let data = Dataset::from_rows(rows, Labels::Real((0..n).map(|i| i as f64).collect())).unwrap();
        match data.split(frac, seed) {
            Ok((g, e)) => {
                prop_assert_eq!(g.len(), (frac * n as f64).floor() as usize);
                prop_assert_eq!(g.len() + e.len(), n);
                let mut ids: Vec<usize> = (0..g.len()).map(|i| g.label(i).as_f64() as usize)
                    .chain((0..e.len()).map(|i| e.label(i).as_f64() as usize))
                    .collect();
                ids.sort_unstable();
                prop_assert_eq!(ids, (0..n).collect::<Vec<_>>());
                prop_assert_eq!(data.split(frac, seed).unwrap(), (g, e));
            }
            Err(_) => {
                let n_gen = (frac * n as f64).floor() as usize;
                prop_assert!(n_gen == 0 || n_gen == n);
            }
        }
    }

    #[test]
    fn containment_is_monotone(
        lo in prop::collection::vec(-5.0f64..5.0, 3),
        widths in prop::collection::vec(0.0f64..3.0, 3),
        grow in prop::collection::vec(0.0f64..2.0, 6),
        t in prop::collection::vec(0.0f64..=1.0, 3),
    ) {
        let hi: Vec<f64> = lo.iter().zip(&widths).map(|(l, w)| l + w).collect();
        let a = Hyperrectangle::new(lo.clone(), hi.clone()).unwrap();
        let b = Hyperrectangle::new(
            lo.iter().zip(&grow[..3]).map(|(l, g)| l - g).collect(),
            hi.iter().zip(&grow[3..]).map(|(h, g)| h + g).collect(),
        ).unwrap();
        prop_assert!(a.is_subset_of(&b));
        let p: Vec<f64> = (0..3).map(|j| (lo[j] + t[j] * (hi[j] - lo[j])).clamp(lo[j], hi[j])).collect();
        prop_assert!(a.contains(&p).unwrap());
        prop_assert!(b.contains(&p).unwrap());
    }

    #[test]
    fn filter_is_idempotent_and_shrinking(
        widths in prop::collection::vec(0.0f64..60.0, 0..30),
        alpha in 0.01f64..0.99,
    ) {
        let mut set = SpecSet::new(TaskKind::Regression, 1, "t");
        for (i, w) in widths.iter().enumerate() {
            set.push(Specification {
                input: Hyperrectangle::new(vec![i as f64], vec![i as f64 + 1.0]).unwrap(),
                output: OutputConstraint::interval(10.0, 10.0 + w).unwrap(),
                provenance: String::new(),
            }).unwrap();
        }
        let stats = DatasetStats { x_min: vec![0.0], x_max: vec![1.0], y_min: 0.0, y_max: 100.0 };
        let once = filter_unbounded(&set, alpha, &stats).unwrap();
        let twice = filter_unbounded(&once, alpha, &stats).unwrap();
        prop_assert!(once.len() <= set.len());
        prop_assert_eq!(&once, &twice);
        for s in once.specs() {
            prop_assert!(s.output.width() <= alpha * 100.0);
        }
        prop_assert_eq!(once.len(), widths.iter().filter(|&&w| (10.0 + w) - 10.0 <= alpha * 100.0).count());
    }

    #[test]
    fn evaluation_matches_naive_oracle(seed: u64) {
        let inst = common::Instance::random(&mut rng(seed), 200, 50);
        let report = score(&inst.spec_set(), &inst.dataset()).unwrap();
        let expected = common::naive_verdicts(&inst.raw_specs, &inst.rows, &inst.labels);
        let per_point = report.per_point.clone().unwrap();
        prop_assert_eq!(per_point.len(), expected.len());
        for (p, (code, ids)) in per_point.iter().zip(&expected) {
            let got = match p.verdict { Verdict::FN => 0, Verdict::TP => 1, Verdict::FP => 2 };
            prop_assert_eq!(got, *code);
            prop_assert_eq!(&p.covering_spec_ids, ids);
            prop_assert_eq!(p.verdict == Verdict::FN, p.covering_spec_ids.is_empty());
        }
        prop_assert_eq!(report.tp + report.fp + report.fn_, inst.rows.len());
    }

    #[test]
    fn evaluation_ignores_ordering(seed: u64) {
        let mut r = rng(seed);
        let inst = common::Instance::random(&mut r, 80, 25);
        let base = score(&inst.spec_set(), &inst.dataset()).unwrap();

        let mut shuffled = common::Instance { task: inst.task, raw_specs: inst.raw_specs.clone(), rows: inst.rows.clone(), labels: inst.labels.clone() };
        let mut spec_order: Vec<usize> = (0..shuffled.raw_specs.len()).collect();
        let mut row_order: Vec<usize> = (0..shuffled.rows.len()).collect();
        use rand::seq::SliceRandom;
        spec_order.shuffle(&mut r);
        row_order.shuffle(&mut r);
        shuffled.raw_specs = spec_order.iter().map(|&i| inst.raw_specs[i].clone()).collect();
        shuffled.rows = row_order.iter().map(|&i| inst.rows[i].clone()).collect();
        shuffled.labels = row_order.iter().map(|&i| inst.labels[i]).collect();
        let other = score(&shuffled.spec_set(), &shuffled.dataset()).unwrap();

        prop_assert_eq!((base.tp, base.fp, base.fn_), (other.tp, other.fp, other.fn_));
        let a = base.per_point.unwrap();
        let b = other.per_point.unwrap();
        for (new_pos, &old_pos) in row_order.iter().enumerate() {
            prop_assert_eq!(a[old_pos].verdict, b[new_pos].verdict);
        }
    }

    #[test]
    fn adding_a_spec_never_raises_false_negatives(seed: u64) {
        let mut r = rng(seed);
        let inst = common::Instance::random(&mut r, 80, 20);
        let before = score(&inst.spec_set(), &inst.dataset()).unwrap();
        let mut more = common::Instance { task: inst.task, raw_specs: inst.raw_specs.clone(), rows: inst.rows.clone(), labels: inst.labels.clone() };
        let dim = inst.rows[0].len();
        let out = match inst.task {
            TaskKind::Classification => OutputConstraint::ClassLabel(r.random_range(0..3)),
            TaskKind::Regression => OutputConstraint::interval(1.0, 2.0).unwrap(),
        };
        let lo: Vec<f64> = (0..dim).map(|_| r.random_range(0..=5) as f64 / 2.0).collect();
        let hi: Vec<f64> = lo.iter().map(|l| l + r.random_range(0..=4) as f64 / 2.0).collect();
        more.raw_specs.push((lo, hi, out));
        let after = score(&more.spec_set(), &more.dataset()).unwrap();
        prop_assert!(after.fn_ <= before.fn_);
    }

    #[test]
    fn point_boxes_reproduce_forward_exactly(seed: u64) {
        let mut r = rng(seed);
        let dim = r.random_range(1..=4);
        let out_dim = r.random_range(1..=3);
        let net = common::random_net(&mut r, dim, out_dim);
        let x: Vec<f64> = (0..dim).map(|_| r.random_range(-5.0..5.0)).collect();
        let b = ibp_bounds(&net, &Hyperrectangle::point(&x).unwrap()).unwrap();
        let y = net.forward(&x).unwrap();
        prop_assert_eq!(&b.lower, &y);
        prop_assert_eq!(&b.upper, &y);
    }

    #[test]
    fn ibp_is_monotone_in_the_box(seed: u64) {
        let mut r = rng(seed);
        let dim = r.random_range(1..=4);
        let net = common::random_net(&mut r, dim, 2);
        let outer = common::random_box(&mut r, dim);
        let a = common::sample_in(&mut r, &outer);
        let b = common::sample_in(&mut r, &outer);
        let inner = Hyperrectangle::new(
            a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect(),
            a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
        ).unwrap();
        let bi = ibp_bounds(&net, &inner).unwrap();
        let bo = ibp_bounds(&net, &outer).unwrap();
        prop_assert!(bi.is_subset_of(&bo), "{:?} not within {:?}", bi, bo);
    }

    #[test]
    fn ibp_bounds_hold_every_sample(seed: u64) {
        let mut r = rng(seed);
        let dim = r.random_range(1..=4);
        let out_dim = r.random_range(1..=3);
        let net = common::random_net(&mut r, dim, out_dim);
        let region = common::random_box(&mut r, dim);
        let bounds = ibp_bounds(&net, &region).unwrap();
        for _ in 0..300 {
            let x = common::sample_in(&mut r, &region);
            let y = net.forward(&x).unwrap();
            prop_assert!(bounds.contains(&y), "{:?} escapes {:?}", y, bounds);
        }
    }

    #[test]
    fn verified_means_no_sample_violates(seed: u64) {
        let mut r = rng(seed);
        let dim = r.random_range(1..=3);
        let net = common::random_net(&mut r, dim, 1);
        let region = common::random_box(&mut r, dim);
        let bounds = ibp_bounds(&net, &region).unwrap();
        // band a bit wider than the bounds on a coin flip, narrower otherwise
        let pad = if r.random_bool(0.5) { 0.5 } else { -0.25 * (bounds.upper[0] - bounds.lower[0]) };
        let (lo, hi) = (bounds.lower[0] - pad, bounds.upper[0] + pad);
        prop_assume!(lo <= hi);
        let spec = Specification { input: region.clone(), output: OutputConstraint::interval(lo, hi).unwrap(), provenance: String::new() };
        let v = verify_spec(&net, &spec, None, None, &Sampler { budget: 100, seed, ..Default::default() }).unwrap();
        if v.result.is_verified() {
            let mut adv = rng(seed.wrapping_add(1));
            for _ in 0..1000 {
                let y = net.forward(&common::sample_in(&mut adv, &region)).unwrap()[0];
                prop_assert!(lo <= y && y <= hi);
            }
        }
        if let specforge::VerifyResult::Violated { counterexamples } = &v.result {
            prop_assert!(!counterexamples.is_empty());
            for c in counterexamples {
                let y = net.forward(&c.input).unwrap();
                prop_assert_eq!(&y, &c.output);
                prop_assert!(!(lo <= y[0] && y[0] <= hi));
            }
        }
    }

    #[test]
    fn tree_leaves_cover_every_point(seed: u64) {
        let mut r = rng(seed);
        let dim = r.random_range(1..=3);
        let n = r.random_range(2..60);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| r.random_range(0..6) as f64).collect()).collect();
        let labels: Vec<usize> = (0..n).map(|_| r.random_range(0..3)).collect();
        let data = Dataset::from_rows(rows, Labels::Class(labels)).unwrap();
        let set = gen_tree(&data, &TreeParams { seed, ..Default::default() }).unwrap();
        let thresholds: Vec<(usize, f64)> = set.specs().iter().flat_map(|s| {
            (0..dim).flat_map(move |j| [(j, s.input.lower()[j]), (j, s.input.upper()[j])])
        }).filter(|(_, v)| v.is_finite()).collect();
        for _ in 0..200 {
            let x: Vec<f64> = (0..dim).map(|_| r.random_range(-10.0..16.0)).collect();
            let hits = set.specs().iter().filter(|s| s.input.contains_unchecked(&x)).count();
            prop_assert!(hits >= 1);
            let on_face = thresholds.iter().any(|&(j, t)| x[j] == t);
            if !on_face {
                prop_assert_eq!(hits, 1);
            }
        }
    }

    #[test]
    fn grid_cells_tile_the_bounding_box(seed: u64, beta in 1usize..7) {
        let mut r = rng(seed);
        let n = r.random_range(2..40);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![r.random_range(-4.0..4.0), r.random_range(0.0..9.0)]).collect();
        let data = Dataset::from_rows(rows, Labels::Class(vec![0; n])).unwrap();
        let stats = data.stats();
        let layout = GridLayout::new(&stats.x_min, &stats.x_max, beta, 1_000).unwrap();
        let boxes: Vec<Hyperrectangle> = layout.cells().iter().map(|k| layout.cell_box(k).unwrap()).collect();
        prop_assert_eq!(boxes.len(), beta * beta);
        let area = |b: &Hyperrectangle| (b.upper()[0] - b.lower()[0]) * (b.upper()[1] - b.lower()[1]);
        let total = (stats.x_max[0] - stats.x_min[0]) * (stats.x_max[1] - stats.x_min[1]);
        let sum: f64 = boxes.iter().map(area).sum();
        prop_assert!((sum - total).abs() <= 1e-9 * total.max(1.0));
        for _ in 0..200 {
            let x = vec![r.random_range(stats.x_min[0]..=stats.x_max[0]), r.random_range(stats.x_min[1]..=stats.x_max[1])];
            let hits = boxes.iter().filter(|b| b.contains_unchecked(&x)).count();
            prop_assert!((1..=4).contains(&hits));
        }
        // emitted specs are exactly the non-empty cells
        let set = gen_grid(&data, &GridParams { beta, ..Default::default() }).unwrap();
        for s in set.specs() {
            prop_assert!(boxes.contains(&s.input));
            prop_assert!(data.rows().any(|row| s.input.contains_unchecked(row)));
        }
    }
}
