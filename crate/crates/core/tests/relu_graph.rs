mod common;

use common::*;
use hzreach::relu_graph::{
    deinterleave, graph_interval, graph_labeled, graph_triangle, graph_vector, relu_layer_graph,
    relu_layer_graph_reference, NeuronInterval, ReluLabel,
};
use hzreach::{HullMode, HybridZonotope};
use nalgebra::DVector;
use proptest::prelude::*;

fn iv(a: f64, b: f64) -> NeuronInterval {
    NeuronInterval::new(a, b).unwrap()
}

fn enclosure(z: &HybridZonotope) -> Vec<NeuronInterval> {
    let h = z.interval_hull(HullMode::Exact).unwrap();
    h.lower.iter().zip(&h.upper).map(|(&a, &b)| iv(a, b)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gadget_is_the_graph(alpha in -3.0f64..-0.01, beta in 0.01f64..3.0, s in 0.0f64..=1.0) {
        let g = graph_interval(iv(alpha, beta));
        prop_assert_eq!((g.n_g(), g.n_b(), g.n_c()), (4, 1, 2));
        let x = alpha + s * (beta - alpha);
        prop_assert!(g.contains_point(&[x, x.max(0.0)], 1e-9).unwrap().is_some());
        // Off-graph points inside the triangle are excluded.
        let y = 0.5 * (x.max(0.0) + beta * (x - alpha) / (beta - alpha));
        if (y - x.max(0.0)).abs() > 1e-6 {
            prop_assert!(g.contains_point(&[x, y], 1e-9).unwrap().is_none());
            prop_assert!(graph_triangle(iv(alpha, beta)).unwrap().contains_point(&[x, y], 1e-9).unwrap().is_some());
        }
    }

    #[test]
    fn triangle_upper_edge_is_tight(alpha in -3.0f64..-0.01, beta in 0.01f64..3.0) {
        let t = graph_triangle(iv(alpha, beta)).unwrap();
        prop_assert_eq!((t.n_g(), t.n_b(), t.n_c()), (5, 0, 2));
        // max y - (β/(β-α)) x is attained on the chord through (α,0), (β,β).
        let k = beta / (beta - alpha);
        let s = t.support(&[-k, 1.0]).unwrap();
        prop_assert!((s - (-k * alpha)).abs() < 1e-9);
    }
}

#[test]
fn stable_neurons_are_segments() {
    let pos = graph_interval(iv(0.5, 2.0));
    assert_eq!((pos.n_g(), pos.n_b(), pos.n_c()), (1, 0, 0));
    assert!(pos.contains(&[1.0, 1.0]).unwrap());
    assert!(!pos.contains(&[1.0, 0.0]).unwrap());
    let neg = graph_interval(iv(-2.0, 0.0));
    assert!(neg.contains(&[-1.0, 0.0]).unwrap());
    assert!(!neg.contains(&[-1.0, -1.0]).unwrap());
    assert!(matches!(graph_triangle(iv(0.0, 1.0)), Err(hzreach::Error::NotUnstable { .. })));
    // A relaxed label on a stable neuron keeps the segment.
    assert_eq!(graph_labeled(iv(0.0, 1.0), ReluLabel::Relaxed), graph_interval(iv(0.0, 1.0)));
}

#[test]
fn deinterleave_orders_inputs_first() {
    let p = deinterleave(3);
    let v = DVector::from_vec(vec![1.0, 10.0, 2.0, 20.0, 3.0, 30.0]);
    assert_eq!((p * v).as_slice(), &[1.0, 2.0, 3.0, 10.0, 20.0, 30.0]);
}

#[test]
fn graph_vector_is_the_product() {
    let ivs = [iv(-1.0, 1.0), iv(0.5, 1.0), iv(-2.0, 3.0)];
    let labels = [ReluLabel::Exact, ReluLabel::Exact, ReluLabel::Relaxed];
    let g = graph_vector(&ivs, &labels).unwrap();
    assert_eq!(g.dim(), 6);
    assert_eq!(g.n_b(), 1);
    let x = [-0.5, 0.7, 1.0];
    let y = [0.0, 0.7, 1.0];
    assert!(g.contains(&[x[0], x[1], x[2], y[0], y[1], y[2]]).unwrap());
    assert!(!g.contains(&[x[0], x[1], x[2], 0.5, y[1], y[2]]).unwrap());
}

/// Substitution and the literal intersection describe the same set, and
/// per-neuron costs are (4,1,3) exact, (5,0,3) relaxed, nothing when stable.
#[test]
fn substitution_matches_reference_construction() {
    let mut r = rng(21);
    for case in 0..12u64 {
        let z = random_hz(&mut r, 3, 4, 1, 1);
        let ivs = enclosure(&z);
        let labels: Vec<ReluLabel> =
            (0..3).map(|i| if (case + i) % 3 == 0 { ReluLabel::Relaxed } else { ReluLabel::Exact }).collect();
        let fast = relu_layer_graph(&z, &ivs, &labels).unwrap();
        let slow = relu_layer_graph_reference(&z, &ivs, &labels).unwrap();

        let (mut dg, mut db, mut dc) = (0, 0, 0);
        for (v, l) in ivs.iter().zip(&labels) {
            if v.is_unstable() {
                match l {
                    ReluLabel::Exact => (dg, db, dc) = (dg + 4, db + 1, dc + 3),
                    ReluLabel::Relaxed => (dg, dc) = (dg + 5, dc + 3),
                }
            }
        }
        let g = &fast.graph;
        assert_eq!((g.n_g(), g.n_b(), g.n_c()), (z.n_g() + dg, z.n_b() + db, z.n_c() + dc), "case {case}");

        for p in slow.graph.sample_points(20, case).unwrap() {
            assert!(g.contains_point(p.as_slice(), 1e-6).unwrap().is_some(), "case {case}");
        }
        for p in g.sample_points(20, case + 100).unwrap() {
            assert!(slow.graph.contains_point(p.as_slice(), 1e-6).unwrap().is_some(), "case {case}");
        }
    }
}

#[test]
fn exact_layer_graph_is_relu_of_members() {
    let mut r = rng(22);
    let z = random_hz(&mut r, 2, 4, 1, 1);
    let ivs = enclosure(&z);
    let g = relu_layer_graph(&z, &ivs, &[ReluLabel::Exact; 2]).unwrap();
    for p in z.sample_points(25, 5).unwrap() {
        let y: Vec<f64> = p.iter().map(|v| v.max(0.0)).collect();
        assert!(g.output.contains_point(&y, 1e-6).unwrap().is_some());
        let pair = [p[0], p[1], y[0], y[1]];
        assert!(g.graph.contains_point(&pair, 1e-6).unwrap().is_some());
    }
    for p in g.graph.sample_points(25, 6).unwrap() {
        assert!((p[2] - p[0].max(0.0)).abs() < 1e-6 && (p[3] - p[1].max(0.0)).abs() < 1e-6);
    }
}

#[test]
fn length_mismatch_is_rejected() {
    let z = unit_box(2);
    assert!(relu_layer_graph(&z, &[iv(-1.0, 1.0)], &[ReluLabel::Exact]).is_err());
    assert!(NeuronInterval::new(1.0, -1.0).is_err());
}
