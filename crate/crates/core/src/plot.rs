//! Exact 2-D projections of hybrid zonotopes and plain SVG/CSV output.
//!
//! Fixing the binaries of a hybrid zonotope leaves a convex constrained
//! zonotope, so a projection is a union of convex polygons, one per feasible
//! binary assignment. Each polygon is recovered from support points: an
//! initial fan of directions, then refinement along the outward normal of
//! every edge until no edge can be pushed out.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hz::{HybridZonotope, Mat};
use crate::par;

/// Projection is refused past this many feasible binary assignments.
pub const MAX_LEAVES: usize = 4096;
/// Relative slack below which a support value does not count as new.
const REFINE_TOL: f64 = 1e-9;
const MAX_REFINE: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    /// Counter-clockwise vertices; fewer than three for degenerate pieces.
    pub vertices: Vec<[f64; 2]>,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn dist_to_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let s = if len2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) };
    ((p[0] - a[0] - s * dx).powi(2) + (p[1] - a[1] - s * dy).powi(2)).sqrt()
}

impl Polygon {
    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        if v.len() < 3 {
            return 0.0;
        }
        let twice: f64 = (0..v.len()).map(|k| {
            let (a, b) = (v[k], v[(k + 1) % v.len()]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum();
        twice / 2.0
    }

    /// Whether `p` lies in the polygon or within `tol` of its boundary.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        let v = &self.vertices;
        match v.len() {
            0 => false,
            1 => dist_to_segment(p, v[0], v[0]) <= tol,
            _ => {
                let n = v.len();
                let near_edge = (0..n).any(|k| dist_to_segment(p, v[k], v[(k + 1) % n]) <= tol);
                near_edge || (n >= 3 && (0..n).all(|k| cross(v[k], v[(k + 1) % n], p) >= 0.0))
            }
        }
    }

    /// `max dᵀv` over the vertices.
    pub fn support(&self, d: [f64; 2]) -> f64 {
        self.vertices.iter().map(|v| v[0] * d[0] + v[1] * d[1]).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Exact polygon of a convex 2-D set given by its support oracle.
fn convex_polygon(
    k_dirs: usize,
    support: &dyn Fn([f64; 2]) -> Result<[f64; 2]>,
) -> Result<Polygon> {
    let k = k_dirs.max(3);
    let mut pts: Vec<[f64; 2]> = (0..k)
        .map(|j| {
            let a = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
            support([a.cos(), a.sin()])
        })
        .collect::<Result<_>>()?;
    let same = |a: [f64; 2], b: [f64; 2]| {
        let scale = 1.0 + a[0].abs().max(a[1].abs()).max(b[0].abs()).max(b[1].abs());
        (a[0] - b[0]).abs() <= 1e-12 * scale && (a[1] - b[1]).abs() <= 1e-12 * scale
    };
    let mut refinements = 0;
    let mut idx = 0;
    while idx < pts.len() && pts.len() > 1 {
        let a = pts[idx];
        let b = pts[(idx + 1) % pts.len()];
        if same(a, b) {
            idx += 1;
            continue;
        }
        let normal = [b[1] - a[1], a[0] - b[0]];
        let base = dot(normal, a);
        let p = support(normal)?;
        let gain = dot(normal, p) - base;
        let scale = normal[0].abs().max(normal[1].abs()) * (1.0 + a[0].abs().max(a[1].abs()));
        if gain > REFINE_TOL * scale && refinements < MAX_REFINE {
            pts.insert(idx + 1, p);
            refinements += 1;
        } else {
            idx += 1;
        }
    }
    let mut vertices: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for p in pts {
        if vertices.last().is_none_or(|q| !same(*q, p)) {
            vertices.push(p);
        }
    }
    while vertices.len() > 1 && same(vertices[0], *vertices.last().expect("nonempty")) {
        vertices.pop();
    }
    // Drop collinear middle points so every listed vertex is a corner.
    let mut changed = true;
    while changed && vertices.len() > 2 {
        changed = false;
        let n = vertices.len();
        for k in 0..n {
            let (o, a, b) = (vertices[(k + n - 1) % n], vertices[k], vertices[(k + 1) % n]);
            let span = ((b[0] - o[0]).abs() + (b[1] - o[1]).abs()).max(1e-300);
            if cross(o, a, b).abs() <= 1e-12 * span * span {
                vertices.remove(k);
                changed = true;
                break;
            }
        }
    }
    Ok(Polygon { vertices })
}

/// Projection of `z` onto coordinates `(i, j)` as one exact convex polygon
/// per feasible binary assignment, in depth-first leaf order.
pub fn emit_projection(z: &HybridZonotope, dims: (usize, usize), k_dirs: usize) -> Result<Vec<Polygon>> {
    let (i, j) = dims;
    if i == j || i >= z.dim() || j >= z.dim() {
        return Err(Error::InvalidArgument(format!("cannot project onto dims ({i}, {j}) of a set in R^{}", z.dim())));
    }
    let mut sel = Mat::zeros(2, z.dim());
    sel[(0, i)] = 1.0;
    sel[(1, j)] = 1.0;
    let planar = z.linear_map(&sel)?;
    let leaves = if planar.n_b() == 0 {
        vec![nalgebra::DVector::zeros(0)]
    } else {
        planar.binary_leaves(MAX_LEAVES)?.ok_or_else(|| {
            Error::InvalidArgument(format!("more than {MAX_LEAVES} binary assignments to project"))
        })?
    };
    if leaves.is_empty() || (planar.n_b() == 0 && planar.is_empty()?) {
        return Err(Error::EmptySet);
    }
    par::try_map(&leaves, |xi_b| {
        let cz = planar.fix_binaries(xi_b)?;
        convex_polygon(k_dirs, &|d| {
            let (_, f) = cz.support_point(&d)?;
            let p = cz.eval(&f);
            Ok([p[0], p[1]])
        })
    })
}

/// Fill colours cycled over layers.
const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

/// A group of polygons drawn with one colour.
pub struct SvgLayer<'a> {
    pub label: String,
    pub polygons: &'a [Polygon],
}

/// Plain SVG of polygon layers and optional scatter points. Coordinates
/// are printed with fixed precision so output is reproducible.
pub fn render_svg(layers: &[SvgLayer<'_>], points: &[[f64; 2]], size: f64) -> String {
    let all = layers.iter().flat_map(|l| l.polygons.iter().flat_map(|p| p.vertices.iter())).chain(points.iter());
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for v in all {
        for a in 0..2 {
            lo[a] = lo[a].min(v[a]);
            hi[a] = hi[a].max(v[a]);
        }
    }
    if !lo[0].is_finite() {
        (lo, hi) = ([0.0; 2], [1.0; 2]);
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
    let margin = 0.05 * span;
    let scale = size / (span + 2.0 * margin);
    let map = |v: &[f64; 2]| ((v[0] - lo[0] + margin) * scale, size - (v[1] - lo[1] + margin) * scale);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0}" height="{size:.0}" viewBox="0 0 {size:.0} {size:.0}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, layer) in layers.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let _ = writeln!(s, r#"<g fill="{colour}" fill-opacity="0.35" stroke="{colour}" stroke-width="1">"#);
        let _ = writeln!(s, "<title>{}</title>", layer.label);
        for p in layer.polygons {
            let pts: Vec<String> = p
                .vertices
                .iter()
                .map(|v| {
                    let (x, y) = map(v);
                    format!("{x:.4},{y:.4}")
                })
                .collect();
            let _ = writeln!(s, r#"<polygon points="{}"/>"#, pts.join(" "));
        }
        let _ = writeln!(s, "</g>");
    }
    if !points.is_empty() {
        let _ = writeln!(s, r#"<g fill="black">"#);
        for p in points {
            let (x, y) = map(p);
            let _ = writeln!(s, r#"<circle cx="{x:.4}" cy="{y:.4}" r="1.2"/>"#);
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}

/// `polygon,vertex,x,y` rows.
pub fn polygons_csv(polys: &[Polygon]) -> String {
    let mut s = String::from("polygon,vertex,x,y\n");
    for (k, p) in polys.iter().enumerate() {
        for (v, [x, y]) in p.vertices.iter().enumerate() {
            let _ = writeln!(s, "{k},{v},{x:e},{y:e}");
        }
    }
    s
}

/// One row per point with columns `x0, x1, ...`.
pub fn points_csv(points: &[Vec<f64>]) -> String {
    let n = points.first().map_or(0, Vec::len);
    let mut s = (0..n).map(|k| format!("x{k}")).collect::<Vec<_>>().join(",");
    s.push('\n');
    for p in points {
        s.push_str(&p.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}
