mod common;

use common::*;
use hzreach::bounds::propagate_intervals;
use hzreach::reach::{
    brs, compute_series, domain_box, frs, predict_complexity, rank_unstable, split_pair, state_pairs, IntervalSource,
    RelaxationPlan,
};
use hzreach::relu_graph::ReluLabel;
use hzreach::{ComplexityRecord, HullMode};

#[test]
fn ranking_keeps_the_largest_triangles() {
    let m = random_rnn(&mut rng(31), 2, &[4, 4], 1.0);
    let tbl = propagate_intervals(&m, &domain_box(&unit_box(2)).unwrap(), 4).unwrap();
    let n = tbl.unstable().len();
    assert!(n > 4);
    for nb in [0, 1, n / 2, n, n + 3] {
        let plan = rank_unstable(&tbl, nb);
        assert_eq!(plan.entries.len(), n);
        assert_eq!(plan.num_exact(), nb.min(n));
        let exact_min = plan.entries.iter().filter(|e| e.label == ReluLabel::Exact).map(|e| e.score).fold(f64::INFINITY, f64::min);
        let relaxed_max =
            plan.entries.iter().filter(|e| e.label == ReluLabel::Relaxed).map(|e| e.score).fold(f64::NEG_INFINITY, f64::max);
        assert!(exact_min >= relaxed_max);
        for e in &plan.entries {
            assert_eq!(e.score, -e.alpha * e.beta / 2.0);
        }
    }
    assert!(rank_unstable(&tbl, n).is_all_exact());
}

#[test]
fn pair_samples_follow_trajectories() {
    for seed in 0..4 {
        let m = random_rnn(&mut rng(seed), 2, &[3, 3], 1.0);
        let x = unit_box(2);
        for nb in [None, Some(0), Some(3)] {
            let s = compute_series(&m, &x, 4, nb, HullMode::Exact).unwrap();
            for t in 2..=4 {
                let pair = &s.pair(t).unwrap().set;
                for v in pair.sample_points(15, seed).unwrap() {
                    let (x1, xt) = split_pair(&v, 2);
                    assert!(unit_box(2).contains_point(&x1, 1e-7).unwrap().is_some());
                    if nb.is_none() {
                        assert!(max_abs_diff(&m.state_at(&x1, t).unwrap(), &xt) < 1e-6);
                    }
                }
            }
        }
    }
}

#[test]
fn predicted_counts_match_every_plan() {
    let m = random_rnn(&mut rng(32), 2, &[4], 1.0);
    let x = unit_box(2);
    let x1 = boxed(&[-0.5, -0.5], &[0.5, 0.5]);
    let target = random_hz(&mut rng(33), 2, 3, 1, 1);
    for nb in [None, Some(0), Some(2), Some(100)] {
        let s = compute_series(&m, &x, 4, nb, HullMode::GeneratorRelaxed).unwrap();
        for p in &s.pairs {
            let pred = predict_complexity(x.complexity(), x1.complexity(), target.complexity(), 2, p.unstable, p.exact);
            assert_eq!(pred.pair, p.complexity());
            assert_eq!(pred.frs, frs(&s, &x1, p.t).unwrap().complexity());
            assert_eq!(pred.brs, brs(&s, &target, p.t).unwrap().complexity());
        }
    }
    let p = predict_complexity(ComplexityRecord::new(2, 0, 0), ComplexityRecord::default(), ComplexityRecord::default(), 2, 5, 2);
    assert_eq!(p.pair, ComplexityRecord::new(2 + 25 - 2, 2, 15));
}

#[test]
fn stable_systems_add_no_factors() {
    let s = compute_series(&identity_system(2), &boxed(&[0.1, 0.2], &[1.0, 2.0]), 5, None, HullMode::Exact).unwrap();
    for p in &s.pairs {
        assert_eq!(p.unstable, 0);
        assert_eq!(p.complexity(), ComplexityRecord::new(2, 0, 0));
    }
    let f = frs(&s, &boxed(&[0.5, 0.5], &[0.6, 0.6]), 5).unwrap();
    assert!(f.contains(&[0.55, 0.55]).unwrap());
    assert!(!f.contains(&[0.7, 0.55]).unwrap());
}

#[test]
fn interval_sources_agree_on_exact_sets() {
    let m = random_rnn(&mut rng(34), 1, &[4], 1.2);
    let x = boxed(&[-1.0], &[1.0]);
    let tbl = propagate_intervals(&m, &domain_box(&x).unwrap(), 3).unwrap();
    let a = state_pairs(&m, &x, 3, &RelaxationPlan::exact(), &tbl, IntervalSource::Table).unwrap();
    let b = state_pairs(&m, &x, 3, &RelaxationPlan::exact(), &tbl, IntervalSource::SetHull(HullMode::Exact)).unwrap();
    assert!(b.pair(3).unwrap().unstable <= a.pair(3).unwrap().unstable);
    for t in 2..=3 {
        let (fa, fb) = (frs(&a, &x, t).unwrap(), frs(&b, &x, t).unwrap());
        for d in [[1.0], [-1.0]] {
            assert!((fa.support(&d).unwrap() - fb.support(&d).unwrap()).abs() < 1e-7);
        }
    }
}

#[test]
fn invalid_requests_are_rejected() {
    let m = half_system();
    let x = boxed(&[0.0], &[1.0]);
    assert!(compute_series(&m, &x, 1, None, HullMode::Exact).is_err());
    assert!(compute_series(&m, &unit_box(2), 3, None, HullMode::Exact).is_err());
    let s = compute_series(&m, &x, 3, None, HullMode::Exact).unwrap();
    assert!(s.pair(1).is_err());
    assert!(s.pair(4).is_err());
    let empty = boxed(&[0.0], &[1.0]).intersect(&boxed(&[2.0], &[3.0])).unwrap();
    assert!(matches!(compute_series(&m, &empty, 3, None, HullMode::Exact), Err(hzreach::Error::EmptyDomain)));
    assert!(s.to_json().contains("\"t\": 3"));
}
