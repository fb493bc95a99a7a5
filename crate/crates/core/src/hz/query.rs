//! Optimization-backed queries. Every query builds a program over the flat
//! factor vector `[ξc; ξb]` with box bounds `[-1, 1]` and the `ξb` entries
//! declared binary.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::{place, FactorPoint, HybridZonotope, Mat, Vector};
use crate::error::{Error, Result};
use crate::interval::IntervalVector;
use crate::opt::{feasible_assignments, lp_solve, milp_solve, LpProblem, MilpProblem};
use crate::par;

/// How [`HybridZonotope::interval_hull`] bounds each coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HullMode {
    /// One MILP minimization and maximization per coordinate.
    Exact,
    /// `c ± (|Gc|·1 + |Gb|·1)`, ignoring constraints.
    GeneratorRelaxed,
}

/// Leaf enumeration is abandoned past this many assignments when sampling.
const SAMPLE_LEAF_LIMIT: usize = 256;
/// Random-objective LP solves combined per sample.
const SAMPLE_VERTICES: usize = 3;

impl HybridZonotope {
    fn n_vars(&self) -> usize {
        self.n_g() + self.n_b()
    }

    fn binary_indices(&self) -> Vec<usize> {
        (self.n_g()..self.n_vars()).collect()
    }

    /// `[Ac Ab] ξ = b` with `ξ ∈ [-1, 1]`, binaries marked.
    fn feasibility_program(&self) -> MilpProblem {
        let nv = self.n_vars();
        let mut a = Mat::zeros(self.n_c(), nv);
        place(&mut a, 0, 0, &self.ac);
        place(&mut a, 0, self.n_g(), &self.ab);
        let lp = LpProblem {
            objective: vec![0.0; nv],
            a,
            b: self.b.iter().copied().collect(),
            lower: vec![-1.0; nv],
            upper: vec![1.0; nv],
        };
        MilpProblem { lp, binaries: self.binary_indices() }
    }

    /// Program whose objective is `-(dᵀ Gc ξc + dᵀ Gb ξb)`.
    fn support_program(&self, d: &[f64]) -> MilpProblem {
        let mut p = self.feasibility_program();
        let dv = Vector::from_column_slice(d);
        let wc = self.gc.tr_mul(&dv);
        let wb = self.gb.tr_mul(&dv);
        p.lp.objective = wc.iter().chain(wb.iter()).map(|v| -v).collect();
        p
    }

    /// A factor point mapping to `x` within `tol` in the infinity norm, or
    /// `None` when `x` is not a member.
    pub fn contains_point(&self, x: &[f64], tol: f64) -> Result<Option<FactorPoint>> {
        if x.len() != self.dim() {
            return Err(Error::LengthMismatch { expected: self.dim(), found: x.len() });
        }
        if tol.is_nan() || tol < 0.0 {
            return Err(Error::InvalidArgument(format!("membership tolerance must be nonnegative, got {tol}")));
        }
        let (n, nv, nc) = (self.dim(), self.n_vars(), self.n_c());
        // Variables: [ξc; ξb; s] with s ∈ [-tol, tol] absorbing the point rows.
        let mut a = DMatrix::zeros(nc + n, nv + n);
        place(&mut a, 0, 0, &self.ac);
        place(&mut a, 0, self.n_g(), &self.ab);
        place(&mut a, nc, 0, &self.gc);
        place(&mut a, nc, self.n_g(), &self.gb);
        place(&mut a, nc, nv, &Mat::identity(n, n));
        let mut b: Vec<f64> = self.b.iter().copied().collect();
        b.extend(x.iter().zip(self.c.iter()).map(|(xi, ci)| xi - ci));
        let mut lower = vec![-1.0; nv];
        let mut upper = vec![1.0; nv];
        lower.extend(std::iter::repeat_n(-tol, n));
        upper.extend(std::iter::repeat_n(tol, n));
        let lp = LpProblem { objective: vec![0.0; nv + n], a, b, lower, upper };
        let res = milp_solve(&MilpProblem { lp, binaries: self.binary_indices() })?;
        Ok(res.solution.map(|s| FactorPoint::from_flat(&s, self.n_g(), self.n_b())))
    }

    /// Membership with the default feasibility tolerance.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.contains_point(x, crate::opt::FEAS_TOL)?.is_some())
    }

    /// Any feasible factor point, or `None` when the set is empty.
    pub fn feasible_factor(&self) -> Result<Option<FactorPoint>> {
        let res = milp_solve(&self.feasibility_program())?;
        Ok(res.solution.map(|s| FactorPoint::from_flat(&s, self.n_g(), self.n_b())))
    }

    pub fn is_empty(&self) -> Result<bool> {
        if self.n_c() == 0 {
            return Ok(false);
        }
        Ok(self.feasible_factor()?.is_none())
    }

    /// `max dᵀx` over the set and a maximizing factor point.
    pub fn support_point(&self, d: &[f64]) -> Result<(f64, FactorPoint)> {
        if d.len() != self.dim() {
            return Err(Error::LengthMismatch { expected: self.dim(), found: d.len() });
        }
        let res = milp_solve(&self.support_program(d))?;
        let sol = res.solution.ok_or(Error::EmptySet)?;
        let f = FactorPoint::from_flat(&sol, self.n_g(), self.n_b());
        let x = self.eval(&f);
        let value = d.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        Ok((value, f))
    }

    pub fn support(&self, d: &[f64]) -> Result<f64> {
        Ok(self.support_point(d)?.0)
    }

    pub fn interval_hull(&self, mode: HullMode) -> Result<IntervalVector> {
        match mode {
            HullMode::GeneratorRelaxed => Ok(self.generator_hull()),
            HullMode::Exact => {
                let n = self.dim();
                if n > 0 && self.is_empty()? {
                    return Err(Error::EmptySet);
                }
                let bounds = par::try_map_range(2 * n, |k| {
                    let (i, sign) = (k / 2, if k % 2 == 0 { -1.0 } else { 1.0 });
                    let mut d = vec![0.0; n];
                    d[i] = sign;
                    self.support(&d).map(|v| sign * v)
                })?;
                let lower = bounds.iter().step_by(2).copied().collect();
                let upper = bounds.iter().skip(1).step_by(2).copied().collect();
                Ok(IntervalVector { lower, upper })
            }
        }
    }

    /// Every binary assignment with a feasible continuous completion, or
    /// `None` when there are more than `limit`.
    pub fn binary_leaves(&self, limit: usize) -> Result<Option<Vec<Vector>>> {
        let leaves = feasible_assignments(&self.feasibility_program(), limit)?;
        Ok(leaves.map(|ls| ls.into_iter().map(Vector::from_vec).collect()))
    }

    /// The constrained zonotope obtained by fixing `ξb`.
    pub fn fix_binaries(&self, xi_b: &Vector) -> Result<Self> {
        if xi_b.len() != self.n_b() {
            return Err(Error::LengthMismatch { expected: self.n_b(), found: xi_b.len() });
        }
        Self::new(
            self.gc.clone(),
            Mat::zeros(self.dim(), 0),
            &self.c + &self.gb * xi_b,
            self.ac.clone(),
            Mat::zeros(self.n_c(), 0),
            &self.b - &self.ab * xi_b,
        )
    }

    /// Depth-first dive over binaries in random sign order, pruning on LP
    /// infeasibility. Returns the fixed `ξb` of the first feasible leaf.
    fn random_leaf(&self, rng: &mut ChaCha8Rng) -> Result<Option<Vec<f64>>> {
        let base = self.feasibility_program().lp;
        let ng = self.n_g();
        let nb = self.n_b();
        // Each frame holds the partial assignment and the untried sign.
        let mut fixed: Vec<f64> = Vec::with_capacity(nb);
        let mut alternatives: Vec<Option<f64>> = Vec::with_capacity(nb);
        let feasible = |fixed: &[f64]| -> Result<bool> {
            let mut lp = base.clone();
            for (k, v) in fixed.iter().enumerate() {
                lp.lower[ng + k] = *v;
                lp.upper[ng + k] = *v;
            }
            Ok(lp_solve(&lp)?.is_feasible())
        };
        if !feasible(&fixed)? {
            return Ok(None);
        }
        loop {
            if fixed.len() == nb {
                return Ok(Some(fixed));
            }
            let first = if rng.random::<bool>() { 1.0 } else { -1.0 };
            fixed.push(first);
            alternatives.push(Some(-first));
            while !feasible(&fixed)? {
                // Walk back to the deepest frame with an untried sign.
                loop {
                    let Some(alt) = alternatives.pop() else {
                        return Ok(None);
                    };
                    fixed.pop();
                    if let Some(v) = alt {
                        fixed.push(v);
                        alternatives.push(None);
                        break;
                    }
                }
            }
        }
    }

    /// A random feasible factor point with the given binaries: a random
    /// convex combination of LP vertices under random objectives.
    fn random_completion(&self, xi_b: &[f64], rng: &mut ChaCha8Rng) -> Result<Option<FactorPoint>> {
        let mut lp = self.feasibility_program().lp;
        let ng = self.n_g();
        for (k, v) in xi_b.iter().enumerate() {
            lp.lower[ng + k] = *v;
            lp.upper[ng + k] = *v;
        }
        let mut acc = Vector::zeros(ng);
        let mut total = 0.0;
        for _ in 0..SAMPLE_VERTICES {
            for j in 0..ng {
                lp.objective[j] = StandardNormal.sample(rng);
            }
            let res = lp_solve(&lp)?;
            let Some(sol) = res.solution else {
                return Ok(None);
            };
            let w: f64 = Exp1.sample(rng);
            acc += Vector::from_column_slice(&sol[..ng]) * w;
            total += w;
        }
        let mut xi_c = acc / total;
        xi_c.apply(|v| *v = v.clamp(-1.0, 1.0));
        Ok(Some(FactorPoint { xi_c, xi_b: Vector::from_column_slice(xi_b) }))
    }

    /// `k` feasible factor points, reproducible for a fixed `seed`
    /// regardless of thread count.
    pub fn sample_factors(&self, k: usize, seed: u64) -> Result<Vec<FactorPoint>> {
        if self.is_empty()? {
            return Err(Error::EmptySet);
        }
        let leaves = if self.n_b() == 0 {
            Some(vec![Vector::zeros(0)])
        } else {
            self.binary_leaves(SAMPLE_LEAF_LIMIT)?
        };
        par::try_map_range(k, |i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let xi_b = match &leaves {
                Some(ls) => ls[rng.random_range(0..ls.len())].iter().copied().collect(),
                None => self.random_leaf(&mut rng)?.ok_or(Error::EmptySet)?,
            };
            self.random_completion(&xi_b, &mut rng)?.ok_or(Error::EmptySet)
        })
    }

    pub fn sample_points(&self, k: usize, seed: u64) -> Result<Vec<Vector>> {
        Ok(self.sample_factors(k, seed)?.iter().map(|f| self.eval(f)).collect())
    }

    /// Membership of many points at once, in input order.
    pub fn contains_batch(&self, points: &[Vector], tol: f64) -> Result<Vec<bool>> {
        par::try_map(points, |x| Ok(self.contains_point(x.as_slice(), tol)?.is_some()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constrained(ac: &[f64], b: f64, gc: Mat) -> HybridZonotope {
        let ng = ac.len();
        let n = gc.nrows();
        HybridZonotope::new(
            gc,
            Mat::zeros(n, 0),
            Vector::zeros(n),
            Mat::from_row_slice(1, ng, ac),
            Mat::zeros(1, 0),
            Vector::from_element(1, b),
        )
        .unwrap()
    }

    #[test]
    fn box_membership() {
        let z = HybridZonotope::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        assert!(z.contains(&[0.0, 0.0]).unwrap());
        assert!(z.contains(&[1.0, -1.0]).unwrap());
        assert!(!z.contains(&[2.0, 0.0]).unwrap());
    }

    #[test]
    fn emptiness_examples() {
        let z = constrained(&[1.0, 1.0], 3.0, Mat::identity(2, 2));
        assert!(z.is_empty().unwrap());
        let mixed = HybridZonotope::new(
            Mat::identity(1, 1),
            Mat::zeros(1, 1),
            Vector::zeros(1),
            Mat::from_element(1, 1, 1.0),
            Mat::from_element(1, 1, 1.0),
            Vector::from_element(1, 2.0),
        )
        .unwrap();
        assert!(!mixed.is_empty().unwrap());
    }

    #[test]
    fn hull_of_diagonal_and_difference() {
        let diag = constrained(&[1.0, -1.0], 0.0, Mat::identity(2, 2));
        let exact = diag.interval_hull(HullMode::Exact).unwrap();
        assert_eq!(exact.lower, vec![-1.0, -1.0]);
        assert_eq!(exact.upper, vec![1.0, 1.0]);
        let diff = constrained(&[1.0, -1.0], 0.0, Mat::from_row_slice(1, 2, &[1.0, -1.0]));
        let exact = diff.interval_hull(HullMode::Exact).unwrap();
        assert!(exact.lower[0].abs() < 1e-12 && exact.upper[0].abs() < 1e-12);
        let relaxed = diff.interval_hull(HullMode::GeneratorRelaxed).unwrap();
        assert_eq!((relaxed.lower[0], relaxed.upper[0]), (-2.0, 2.0));
    }

    #[test]
    fn exact_hull_of_empty_set_errors() {
        let z = constrained(&[1.0, 1.0], 3.0, Mat::identity(2, 2));
        assert!(matches!(z.interval_hull(HullMode::Exact), Err(Error::EmptySet)));
        assert!(matches!(z.support(&[1.0, 0.0]), Err(Error::EmptySet)));
    }

    #[test]
    fn support_of_box() {
        let z = HybridZonotope::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(z.support(&[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(z.support(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn samples_are_deterministic_members() {
        let z = HybridZonotope::new(
            Mat::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]),
            Mat::from_row_slice(2, 1, &[2.0, 0.0]),
            Vector::zeros(2),
            Mat::from_row_slice(1, 2, &[1.0, 1.0]),
            Mat::from_row_slice(1, 1, &[0.5]),
            Vector::from_element(1, 0.5),
        )
        .unwrap();
        let a = z.sample_points(20, 7).unwrap();
        let b = z.sample_points(20, 7).unwrap();
        assert_eq!(a, b);
        for x in &a {
            assert!(z.contains_point(x.as_slice(), 1e-9).unwrap().is_some());
        }
    }

    #[test]
    fn point_set_samples_equal_the_point() {
        let z = HybridZonotope::point(&[0.25, -3.0]);
        for x in z.sample_points(5, 1).unwrap() {
            assert_eq!(x.as_slice(), &[0.25, -3.0]);
        }
    }

    #[test]
    fn random_leaf_dive_finds_feasible_leaf() {
        // ξb1 + ξb2 = 0 leaves exactly two feasible assignments.
        let z = HybridZonotope::new(
            Mat::zeros(1, 0),
            Mat::from_row_slice(1, 2, &[1.0, 2.0]),
            Vector::zeros(1),
            Mat::zeros(1, 0),
            Mat::from_row_slice(1, 2, &[1.0, 1.0]),
            Vector::zeros(1),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..8 {
            let leaf = z.random_leaf(&mut rng).unwrap().unwrap();
            assert_eq!(leaf[0] + leaf[1], 0.0);
        }
        assert_eq!(z.binary_leaves(10).unwrap().unwrap().len(), 2);
    }
}
