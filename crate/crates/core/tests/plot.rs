mod common;

use common::*;
use hzreach::plot::{emit_projection, points_csv, polygons_csv, render_svg, SvgLayer};
use hzreach::relu_graph::{graph_interval, graph_triangle, NeuronInterval};

#[test]
fn vertices_attain_the_true_support() {
    let mut r = rng(71);
    for case in 0..6 {
        let z = random_hz(&mut r, 3, 5, 2, 2);
        let polys = emit_projection(&z, (0, 2), 32).unwrap();
        let planar = z.linear_map(&nalgebra::DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0])).unwrap();
        for k in 0..48 {
            let a = std::f64::consts::TAU * k as f64 / 48.0;
            let d = [a.cos(), a.sin()];
            let union = polys.iter().map(|p| p.support(d)).fold(f64::NEG_INFINITY, f64::max);
            let truth = planar.support(&d).unwrap();
            assert!((union - truth).abs() < 1e-6, "case {case}: {union} vs {truth}");
        }
        for p in z.sample_points(100, case).unwrap() {
            assert!(polys.iter().any(|poly| poly.contains([p[0], p[2]], 1e-6)), "case {case}");
        }
    }
}

#[test]
fn relu_graph_projections() {
    let iv = NeuronInterval::new(-1.0, 2.0).unwrap();
    let exact = emit_projection(&graph_interval(iv), (0, 1), 16).unwrap();
    // Two degenerate segments, one per branch.
    assert_eq!(exact.len(), 2);
    assert!(exact.iter().all(|p| p.area().abs() < 1e-12));
    let tri = emit_projection(&graph_triangle(iv).unwrap(), (0, 1), 16).unwrap();
    assert_eq!(tri[0].vertices.len(), 3);
    assert!((tri[0].area() - 1.0).abs() < 1e-9);
}

#[test]
fn projection_errors() {
    let z = unit_box(2);
    assert!(emit_projection(&z, (0, 0), 8).is_err());
    assert!(emit_projection(&z, (0, 2), 8).is_err());
    let empty = z.intersect(&boxed(&[3.0, 3.0], &[4.0, 4.0])).unwrap();
    assert!(matches!(emit_projection(&empty, (0, 1), 8), Err(hzreach::Error::EmptySet)));
}

#[test]
fn text_outputs_are_deterministic() {
    let z = random_hz(&mut rng(72), 2, 4, 1, 1);
    let a = emit_projection(&z, (0, 1), 16).unwrap();
    let b = emit_projection(&z, (0, 1), 16).unwrap();
    assert_eq!(a, b);
    let pts: Vec<Vec<f64>> = z.sample_points(10, 3).unwrap().iter().map(|v| v.iter().copied().collect()).collect();
    let scatter: Vec<[f64; 2]> = pts.iter().map(|p| [p[0], p[1]]).collect();
    let svg = render_svg(&[SvgLayer { label: "z".into(), polygons: &a }], &scatter, 300.0);
    assert_eq!(svg, render_svg(&[SvgLayer { label: "z".into(), polygons: &b }], &scatter, 300.0));
    assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    assert_eq!(svg.matches("<polygon").count(), a.len());
    assert_eq!(svg.matches("<circle").count(), 10);
    assert_eq!(polygons_csv(&a).lines().count(), 1 + a.iter().map(|p| p.vertices.len()).sum::<usize>());
    assert_eq!(points_csv(&pts).lines().next(), Some("x0,x1"));
}
