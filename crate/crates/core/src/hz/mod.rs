//! Hybrid zonotopes and their set algebra.
//!
//! A hybrid zonotope `⟨Gc, Gb, c, Ac, Ab, b⟩` is the set
//!
//! ```text
//! { Gc ξc + Gb ξb + c  :  ξc ∈ [-1, 1]^ng,  ξb ∈ {-1, 1}^nb,  Ac ξc + Ab ξb = b }
//! ```
//!
//! The algebraic operations here (affine maps, generalized intersection,
//! Cartesian and constrained products) are closed-form block constructions.
//! Queries that need optimization (membership, emptiness, support, hulls,
//! sampling) live in [`query`].
//!
//! Constraint ordering matters: every construction keeps the constraints and
//! factors of its "inherited" operand as a leading block, so sets derived
//! from a common ancestor can later be recombined with
//! [`HybridZonotope::constrained_product`].

mod json;
mod query;

pub use json::HzJson;
pub use query::HullMode;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::IntervalVector;

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Generator and constraint counts of a hybrid zonotope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ComplexityRecord {
    pub n_g: usize,
    pub n_b: usize,
    pub n_c: usize,
}

impl ComplexityRecord {
    pub const fn new(n_g: usize, n_b: usize, n_c: usize) -> Self {
        Self { n_g, n_b, n_c }
    }
}

impl std::ops::Add for ComplexityRecord {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.n_g + o.n_g, self.n_b + o.n_b, self.n_c + o.n_c)
    }
}

impl std::fmt::Display for ComplexityRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(n_g={}, n_b={}, n_c={})", self.n_g, self.n_b, self.n_c)
    }
}

/// Values of the continuous and binary factors of a hybrid zonotope.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPoint {
    pub xi_c: Vector,
    pub xi_b: Vector,
}

impl FactorPoint {
    /// Splits a flat `[ξc; ξb]` solver vector.
    pub(crate) fn from_flat(x: &[f64], n_g: usize, n_b: usize) -> Self {
        Self {
            xi_c: Vector::from_column_slice(&x[..n_g]),
            xi_b: Vector::from_column_slice(&x[n_g..n_g + n_b]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridZonotope {
    gc: Mat,
    gb: Mat,
    c: Vector,
    ac: Mat,
    ab: Mat,
    b: Vector,
}

/// Writes `src` into `dst` with its top-left corner at `(r, c)`.
pub(crate) fn place(dst: &mut Mat, r: usize, c: usize, src: &Mat) {
    if src.nrows() > 0 && src.ncols() > 0 {
        dst.view_mut((r, c), (src.nrows(), src.ncols())).copy_from(src);
    }
}

fn stack_vectors(parts: &[&Vector]) -> Vector {
    let len = parts.iter().map(|v| v.len()).sum();
    let mut out = Vector::zeros(len);
    let mut at = 0;
    for p in parts {
        out.rows_mut(at, p.len()).copy_from(p);
        at += p.len();
    }
    out
}

impl HybridZonotope {
    pub fn new(gc: Mat, gb: Mat, c: Vector, ac: Mat, ab: Mat, b: Vector) -> Result<Self> {
        let n = c.len();
        let nc = b.len();
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Dimension(what.to_string()))
            }
        };
        check(gc.nrows() == n, "Gc rows must equal len(c)")?;
        check(gb.nrows() == n, "Gb rows must equal len(c)")?;
        check(ac.nrows() == nc, "Ac rows must equal len(b)")?;
        check(ab.nrows() == nc, "Ab rows must equal len(b)")?;
        check(ac.ncols() == gc.ncols(), "Ac and Gc must have the same column count")?;
        check(ab.ncols() == gb.ncols(), "Ab and Gb must have the same column count")?;
        Ok(Self { gc, gb, c, ac, ab, b })
    }

    /// Unconstrained zonotope `⟨G, ∅, c, ∅, ∅, ∅⟩`.
    pub fn zonotope(g: Mat, c: Vector) -> Result<Self> {
        let n = c.len();
        let ng = g.ncols();
        Self::new(g, Mat::zeros(n, 0), c, Mat::zeros(0, ng), Mat::zeros(0, 0), Vector::zeros(0))
    }

    /// Box `[lower, upper]` as a zonotope with one generator per coordinate.
    pub fn from_box(lower: &[f64], upper: &[f64]) -> Result<Self> {
        let iv = IntervalVector::new(lower.to_vec(), upper.to_vec())?;
        Ok(Self::from_interval(&iv))
    }

    pub fn from_interval(iv: &IntervalVector) -> Self {
        let n = iv.dim();
        let g = Mat::from_fn(n, n, |i, j| if i == j { 0.5 * (iv.upper[i] - iv.lower[i]) } else { 0.0 });
        let c = Vector::from_vec(iv.center());
        Self::zonotope(g, c).expect("box dimensions are consistent")
    }

    /// The singleton `{x}`.
    pub fn point(x: &[f64]) -> Self {
        let n = x.len();
        Self::zonotope(Mat::zeros(n, 0), Vector::from_column_slice(x)).expect("consistent")
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }
    pub fn n_g(&self) -> usize {
        self.gc.ncols()
    }
    pub fn n_b(&self) -> usize {
        self.gb.ncols()
    }
    pub fn n_c(&self) -> usize {
        self.b.len()
    }
    pub fn complexity(&self) -> ComplexityRecord {
        ComplexityRecord::new(self.n_g(), self.n_b(), self.n_c())
    }
    pub fn gc(&self) -> &Mat {
        &self.gc
    }
    pub fn gb(&self) -> &Mat {
        &self.gb
    }
    pub fn c(&self) -> &Vector {
        &self.c
    }
    pub fn ac(&self) -> &Mat {
        &self.ac
    }
    pub fn ab(&self) -> &Mat {
        &self.ab
    }
    pub fn b(&self) -> &Vector {
        &self.b
    }

    /// `Gc ξc + Gb ξb + c` for the given factors (constraints not checked).
    pub fn eval(&self, f: &FactorPoint) -> Vector {
        &self.gc * &f.xi_c + &self.gb * &f.xi_b + &self.c
    }

    /// Largest equality-constraint residual of the given factors.
    pub fn constraint_residual(&self, f: &FactorPoint) -> f64 {
        if self.n_c() == 0 {
            return 0.0;
        }
        (&self.ac * &f.xi_c + &self.ab * &f.xi_b - &self.b).amax()
    }

    /// `{R x + t : x ∈ Z}`; the constraint block is left untouched.
    pub fn affine_map(&self, r: &Mat, t: &Vector) -> Result<Self> {
        if r.ncols() != self.dim() || t.len() != r.nrows() {
            return Err(Error::Dimension(format!(
                "affine map {}x{} with offset {} applied to a set in R^{}",
                r.nrows(),
                r.ncols(),
                t.len(),
                self.dim()
            )));
        }
        Ok(Self {
            gc: r * &self.gc,
            gb: r * &self.gb,
            c: r * &self.c + t,
            ac: self.ac.clone(),
            ab: self.ab.clone(),
            b: self.b.clone(),
        })
    }

    pub fn linear_map(&self, r: &Mat) -> Result<Self> {
        self.affine_map(r, &Vector::zeros(r.nrows()))
    }

    /// Keeps coordinates `start..start + len` (a `[0 I 0]` map).
    pub fn project(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.dim() {
            return Err(Error::Dimension(format!(
                "cannot take coordinates {start}..{} of a set in R^{}",
                start + len,
                self.dim()
            )));
        }
        Ok(Self {
            gc: self.gc.rows(start, len).into_owned(),
            gb: self.gb.rows(start, len).into_owned(),
            c: self.c.rows(start, len).into_owned(),
            ac: self.ac.clone(),
            ab: self.ab.clone(),
            b: self.b.clone(),
        })
    }

    /// `{x ∈ self : R x ∈ y}`.
    ///
    /// Factor order is `y`'s factors followed by `self`'s; constraint rows
    /// are `y`'s, then `self`'s, then the coupling rows
    /// `[-Gc_y | R Gc_z] ξc + [-Gb_y | R Gb_z] ξb = c_y - R c_z`.
    pub fn generalized_intersect(&self, y: &Self, r: &Mat) -> Result<Self> {
        let (n, m) = (self.dim(), y.dim());
        if r.ncols() != n || r.nrows() != m {
            return Err(Error::Dimension(format!(
                "intersection map must be {m}x{n}, got {}x{}",
                r.nrows(),
                r.ncols()
            )));
        }
        let (ngy, nby, ncy) = (y.n_g(), y.n_b(), y.n_c());
        let (ngz, nbz, ncz) = (self.n_g(), self.n_b(), self.n_c());
        let rows = ncy + ncz + m;

        let mut gc = Mat::zeros(n, ngy + ngz);
        place(&mut gc, 0, ngy, &self.gc);
        let mut gb = Mat::zeros(n, nby + nbz);
        place(&mut gb, 0, nby, &self.gb);

        let mut ac = Mat::zeros(rows, ngy + ngz);
        place(&mut ac, 0, 0, &y.ac);
        place(&mut ac, ncy, ngy, &self.ac);
        place(&mut ac, ncy + ncz, 0, &(-&y.gc));
        place(&mut ac, ncy + ncz, ngy, &(r * &self.gc));

        let mut ab = Mat::zeros(rows, nby + nbz);
        place(&mut ab, 0, 0, &y.ab);
        place(&mut ab, ncy, nby, &self.ab);
        place(&mut ab, ncy + ncz, 0, &(-&y.gb));
        place(&mut ab, ncy + ncz, nby, &(r * &self.gb));

        let coupling = &y.c - r * &self.c;
        let b = stack_vectors(&[&y.b, &self.b, &coupling]);
        Self::new(gc, gb, self.c.clone(), ac, ab, b)
    }

    /// Plain intersection (`R = I`).
    pub fn intersect(&self, y: &Self) -> Result<Self> {
        self.generalized_intersect(y, &Mat::identity(self.dim(), self.dim()))
    }

    /// `{(z, y) : z ∈ self, y ∈ y}` with block-diagonal data.
    pub fn cartesian_product(&self, y: &Self) -> Self {
        let (n1, n2) = (self.dim(), y.dim());
        let (g1, g2) = (self.n_g(), y.n_g());
        let (b1, b2) = (self.n_b(), y.n_b());
        let (c1, c2) = (self.n_c(), y.n_c());
        let mut gc = Mat::zeros(n1 + n2, g1 + g2);
        place(&mut gc, 0, 0, &self.gc);
        place(&mut gc, n1, g1, &y.gc);
        let mut gb = Mat::zeros(n1 + n2, b1 + b2);
        place(&mut gb, 0, 0, &self.gb);
        place(&mut gb, n1, b1, &y.gb);
        let mut ac = Mat::zeros(c1 + c2, g1 + g2);
        place(&mut ac, 0, 0, &self.ac);
        place(&mut ac, c1, g1, &y.ac);
        let mut ab = Mat::zeros(c1 + c2, b1 + b2);
        place(&mut ab, 0, 0, &self.ab);
        place(&mut ab, c1, b1, &y.ab);
        let c = stack_vectors(&[&self.c, &y.c]);
        let b = stack_vectors(&[&self.b, &y.b]);
        Self { gc, gb, c, ac, ab, b }
    }

    /// Checks that `self`'s constraints form the leading block of `y`'s:
    /// `Ac_y = [Ac_z 0; *]`, `Ab_y = [Ab_z 0; *]`, `b_y = [b_z; *]`,
    /// compared exactly.
    pub fn is_constraint_prefix_of(&self, y: &Self) -> std::result::Result<(), String> {
        let (ngz, nbz, ncz) = (self.n_g(), self.n_b(), self.n_c());
        if ngz > y.n_g() || nbz > y.n_b() || ncz > y.n_c() {
            return Err(format!(
                "first operand {} is larger than second operand {}",
                self.complexity(),
                y.complexity()
            ));
        }
        let block_matches = |yz: &Mat, z: &Mat, lead: usize| -> bool {
            let head = yz.view((0, 0), (ncz, lead));
            let tail = yz.view((0, lead), (ncz, yz.ncols() - lead));
            head == z.view((0, 0), (ncz, lead)) && tail.iter().all(|&v| v == 0.0)
        };
        if !block_matches(&y.ac, &self.ac, ngz) {
            return Err("continuous constraint block Ac is not a prefix".into());
        }
        if !block_matches(&y.ab, &self.ab, nbz) {
            return Err("binary constraint block Ab is not a prefix".into());
        }
        if y.b.rows(0, ncz) != self.b {
            return Err("right-hand side b is not a prefix".into());
        }
        Ok(())
    }

    /// Constrained product `C(self, y)`: the pairs `(z, y)` generated by a
    /// shared leading block of factors. Requires `self`'s constraints to be
    /// an exact prefix of `y`'s (see [`Self::is_constraint_prefix_of`]).
    pub fn constrained_product(&self, y: &Self) -> Result<Self> {
        self.is_constraint_prefix_of(y).map_err(Error::PrefixMismatch)?;
        let (nz, ny) = (self.dim(), y.dim());
        let mut gc = Mat::zeros(nz + ny, y.n_g());
        place(&mut gc, 0, 0, &self.gc);
        place(&mut gc, nz, 0, &y.gc);
        let mut gb = Mat::zeros(nz + ny, y.n_b());
        place(&mut gb, 0, 0, &self.gb);
        place(&mut gb, nz, 0, &y.gb);
        let c = stack_vectors(&[&self.c, &y.c]);
        Ok(Self { gc, gb, c, ac: y.ac.clone(), ab: y.ab.clone(), b: y.b.clone() })
    }

    /// Generator-only hull `c ± (|Gc|·1 + |Gb|·1)`, ignoring constraints.
    pub fn generator_hull(&self) -> IntervalVector {
        let n = self.dim();
        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        for i in 0..n {
            let r: f64 = self.gc.row(i).iter().map(|v| v.abs()).sum::<f64>()
                + self.gb.row(i).iter().map(|v| v.abs()).sum::<f64>();
            lower.push(self.c[i] - r);
            upper.push(self.c[i] + r);
        }
        IntervalVector { lower, upper }
    }
}

/// `[I_n 0]` of shape `n × total`, selecting the first `n` coordinates.
pub fn select_first(n: usize, total: usize) -> Mat {
    Mat::from_fn(n, total, |i, j| if i == j { 1.0 } else { 0.0 })
}

/// `[0 I_n]` of shape `n × total`, selecting the last `n` coordinates.
pub fn select_last(n: usize, total: usize) -> Mat {
    let off = total - n;
    Mat::from_fn(n, total, |i, j| if j == off + i { 1.0 } else { 0.0 })
}
