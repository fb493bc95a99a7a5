//! Hybrid-zonotope encodings of the ReLU graph `{(x, max(0, x)) : x ∈ [α, β]}`.
//!
//! Per-neuron graphs are 2-D with coordinates `(input, output)`. Stable
//! neurons use a single segment generator. An unstable neuron uses a gadget
//! with four continuous factors, one binary and two constraints:
//!
//! ```text
//! x = (α/2) ξ1 + (β/2) ξ2 + (α+β)/2        ξ1 - ξ3 + ξb = -1
//! y =            (β/2) ξ2 +     β/2        ξ2 - ξ4 - ξb = -1
//! ```
//!
//! `ξb = 1` forces `ξ1 = -1` and leaves `x = y ∈ [0, β]`; `ξb = -1` forces
//! `ξ2 = -1` and leaves `y = 0`, `x ∈ [α, 0]`. Declaring `ξb` continuous gives
//! the convex hull of the two segments, the triangle `(α,0), (0,0), (β,β)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hz::{place, select_first, HybridZonotope, Mat, Vector};

/// Input enclosure `[α, β]` of a single neuron.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronInterval {
    pub alpha: f64,
    pub beta: f64,
}

impl NeuronInterval {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && alpha <= beta) {
            return Err(Error::InvalidInterval { lower: alpha, upper: beta });
        }
        Ok(Self { alpha, beta })
    }

    /// `α < 0 < β`. Boundary cases `α = 0` or `β = 0` count as stable.
    pub fn is_unstable(&self) -> bool {
        self.alpha < 0.0 && 0.0 < self.beta
    }

    /// Area of the triangle relaxation, `-αβ/2`.
    pub fn triangle_area(&self) -> f64 {
        -self.alpha * self.beta / 2.0
    }

    fn kind(&self) -> Kind {
        if self.alpha >= 0.0 {
            Kind::Positive
        } else if self.beta <= 0.0 {
            Kind::Negative
        } else {
            Kind::Unstable
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Positive,
    Negative,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReluLabel {
    Exact,
    Relaxed,
}

/// Factor data of the unstable gadget. With `relaxed` the binary column is
/// appended to the continuous block.
struct Gadget {
    gc: Mat,
    gb: Mat,
    c: Vector,
    ac: Mat,
    ab: Mat,
    b: Vector,
}

fn gadget(iv: NeuronInterval, relaxed: bool) -> Gadget {
    let (a, bt) = (iv.alpha, iv.beta);
    let gc4 = Mat::from_row_slice(2, 4, &[a / 2.0, bt / 2.0, 0.0, 0.0, 0.0, bt / 2.0, 0.0, 0.0]);
    let ac4 = Mat::from_row_slice(2, 4, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
    let ab1 = Mat::from_row_slice(2, 1, &[1.0, -1.0]);
    let c = Vector::from_vec(vec![(a + bt) / 2.0, bt / 2.0]);
    let b = Vector::from_vec(vec![-1.0, -1.0]);
    if relaxed {
        let mut gc = Mat::zeros(2, 5);
        place(&mut gc, 0, 0, &gc4);
        let mut ac = Mat::zeros(2, 5);
        place(&mut ac, 0, 0, &ac4);
        place(&mut ac, 0, 4, &ab1);
        Gadget { gc, gb: Mat::zeros(2, 0), c, ac, ab: Mat::zeros(2, 0), b }
    } else {
        Gadget { gc: gc4, gb: Mat::zeros(2, 1), c, ac: ac4, ab: ab1, b }
    }
}

impl Gadget {
    fn into_hz(self) -> HybridZonotope {
        HybridZonotope::new(self.gc, self.gb, self.c, self.ac, self.ab, self.b).expect("gadget shapes are fixed")
    }
}

fn segment(iv: NeuronInterval, positive: bool) -> HybridZonotope {
    let r = (iv.beta - iv.alpha) / 2.0;
    let m = (iv.beta + iv.alpha) / 2.0;
    let (gy, cy) = if positive { (r, m) } else { (0.0, 0.0) };
    HybridZonotope::zonotope(Mat::from_column_slice(2, 1, &[r, gy]), Vector::from_vec(vec![m, cy]))
        .expect("segment shapes are fixed")
}

/// Exact ReLU graph over `iv`: a segment when stable, the binary gadget
/// when unstable.
pub fn graph_interval(iv: NeuronInterval) -> HybridZonotope {
    match iv.kind() {
        Kind::Positive => segment(iv, true),
        Kind::Negative => segment(iv, false),
        Kind::Unstable => gadget(iv, false).into_hz(),
    }
}

/// Triangle relaxation of an unstable neuron's graph.
pub fn graph_triangle(iv: NeuronInterval) -> Result<HybridZonotope> {
    if !iv.is_unstable() {
        return Err(Error::NotUnstable { alpha: iv.alpha, beta: iv.beta });
    }
    Ok(gadget(iv, true).into_hz())
}

/// Triangle when the neuron is unstable and labelled relaxed, exact graph
/// otherwise.
pub fn graph_labeled(iv: NeuronInterval, label: ReluLabel) -> HybridZonotope {
    if iv.is_unstable() && label == ReluLabel::Relaxed {
        gadget(iv, true).into_hz()
    } else {
        graph_interval(iv)
    }
}

/// Permutation taking interleaved `(x1, y1, x2, y2, ...)` to
/// `(x1, x2, ..., y1, y2, ...)`.
pub fn deinterleave(m: usize) -> Mat {
    let mut p = Mat::zeros(2 * m, 2 * m);
    for i in 0..m {
        p[(i, 2 * i)] = 1.0;
        p[(m + i, 2 * i + 1)] = 1.0;
    }
    p
}

/// Product of per-neuron graphs with coordinates ordered (all inputs, all
/// outputs).
pub fn graph_vector(ivs: &[NeuronInterval], labels: &[ReluLabel]) -> Result<HybridZonotope> {
    if ivs.len() != labels.len() {
        return Err(Error::LengthMismatch { expected: ivs.len(), found: labels.len() });
    }
    let mut acc = HybridZonotope::point(&[]);
    for (iv, label) in ivs.iter().zip(labels) {
        acc = acc.cartesian_product(&graph_labeled(*iv, *label));
    }
    acc.linear_map(&deinterleave(ivs.len()))
}

/// The graph of ReLU over a set and its image.
#[derive(Debug, Clone)]
pub struct LayerGraph {
    /// Pairs `(z, σ(z))`, coordinates ordered (inputs, outputs).
    pub graph: HybridZonotope,
    /// `σ(Z)` (or its relaxation), the output block of `graph`.
    pub output: HybridZonotope,
}

/// ReLU graph over `z`, given a sound enclosure `ivs` of its coordinates.
///
/// Equal as a set to `graph_vector(ivs, labels) ∩_{[I 0]} z`, but built by
/// substitution so that stable neurons add nothing: a nonnegative input
/// passes through, a nonpositive one becomes zero, and each unstable neuron
/// appends its gadget plus one row tying the gadget input to `z`. Factors
/// and constraints of `z` stay a leading block.
pub fn relu_layer_graph(z: &HybridZonotope, ivs: &[NeuronInterval], labels: &[ReluLabel]) -> Result<LayerGraph> {
    let m = z.dim();
    if ivs.len() != m {
        return Err(Error::LengthMismatch { expected: m, found: ivs.len() });
    }
    if labels.len() != m {
        return Err(Error::LengthMismatch { expected: m, found: labels.len() });
    }
    let unstable: Vec<(usize, Gadget)> = ivs
        .iter()
        .zip(labels)
        .enumerate()
        .filter(|(_, (iv, _))| iv.is_unstable())
        .map(|(i, (iv, label))| (i, gadget(*iv, *label == ReluLabel::Relaxed)))
        .collect();

    let (gz, bz, cz) = (z.n_g(), z.n_b(), z.n_c());
    let ng = gz + unstable.iter().map(|(_, g)| g.gc.ncols()).sum::<usize>();
    let nb = bz + unstable.iter().map(|(_, g)| g.gb.ncols()).sum::<usize>();
    let nc = cz + 3 * unstable.len();
    let k = unstable.len();

    let mut gc = Mat::zeros(2 * m, ng);
    let mut gb = Mat::zeros(2 * m, nb);
    let mut c = Vector::zeros(2 * m);
    let mut ac = Mat::zeros(nc, ng);
    let mut ab = Mat::zeros(nc, nb);
    let mut b = Vector::zeros(nc);

    // Input block is z itself.
    place(&mut gc, 0, 0, z.gc());
    place(&mut gb, 0, 0, z.gb());
    c.rows_mut(0, m).copy_from(z.c());
    place(&mut ac, 0, 0, z.ac());
    place(&mut ab, 0, 0, z.ab());
    b.rows_mut(0, cz).copy_from(z.b());

    // Stable outputs reuse z's rows.
    for (i, iv) in ivs.iter().enumerate() {
        if iv.kind() == Kind::Positive {
            gc.view_mut((m + i, 0), (1, gz)).copy_from(&z.gc().row(i));
            gb.view_mut((m + i, 0), (1, bz)).copy_from(&z.gb().row(i));
            c[m + i] = z.c()[i];
        }
    }

    let (mut col_c, mut col_b) = (gz, bz);
    for (slot, (i, g)) in unstable.iter().enumerate() {
        let (wc, wb) = (g.gc.ncols(), g.gb.ncols());
        // Output row: the gadget's y coordinate.
        place(&mut gc, m + i, col_c, &g.gc.rows(1, 1).into_owned());
        place(&mut gb, m + i, col_b, &g.gb.rows(1, 1).into_owned());
        c[m + i] = g.c[1];
        // Gadget constraints, block-diagonal after z's.
        let r = cz + 2 * slot;
        place(&mut ac, r, col_c, &g.ac);
        place(&mut ab, r, col_b, &g.ab);
        b.rows_mut(r, 2).copy_from(&g.b);
        // Coupling: -z_i + gadget_x = c_z,i - c_gadget,x.
        let q = cz + 2 * k + slot;
        for j in 0..gz {
            ac[(q, j)] = -z.gc()[(*i, j)];
        }
        for j in 0..bz {
            ab[(q, j)] = -z.gb()[(*i, j)];
        }
        place(&mut ac, q, col_c, &g.gc.rows(0, 1).into_owned());
        place(&mut ab, q, col_b, &g.gb.rows(0, 1).into_owned());
        b[q] = z.c()[*i] - g.c[0];
        col_c += wc;
        col_b += wb;
    }

    let graph = HybridZonotope::new(gc, gb, c, ac, ab, b)?;
    let output = graph.project(m, m)?;
    Ok(LayerGraph { graph, output })
}

/// The literal construction `graph_vector(ivs, labels) ∩_{[I 0]} z`. Same
/// set as [`relu_layer_graph`] with one more factor and row per stable
/// neuron.
pub fn relu_layer_graph_reference(
    z: &HybridZonotope,
    ivs: &[NeuronInterval],
    labels: &[ReluLabel],
) -> Result<LayerGraph> {
    let m = z.dim();
    if ivs.len() != m {
        return Err(Error::LengthMismatch { expected: m, found: ivs.len() });
    }
    let g = graph_vector(ivs, labels)?;
    let graph = g.generalized_intersect(z, &select_first(m, 2 * m))?;
    let output = graph.project(m, m)?;
    Ok(LayerGraph { graph, output })
}
