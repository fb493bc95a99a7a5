//! Bounded-variable primal simplex and depth-first branch-and-bound over
//! `{-1, +1}` binaries.
//!
//! Every program handled here has the form
//!
//! ```text
//! minimize cᵀx  subject to  A x = b,  l ≤ x ≤ u,  x_k ∈ {-1, 1} for k ∈ binaries
//! ```
//!
//! with finite bounds on every variable, which is exactly the shape of the
//! feasibility programs behind hybrid-zonotope queries. Primal pivoting
//! follows Bland's rule; branch-and-bound children re-solve with a bounded
//! dual simplex from the parent basis. Results are deterministic.

use std::rc::Rc;

use nalgebra::{DMatrix, DVector};

/// Equality residual allowed on feasible solutions (infinity norm).
pub const FEAS_TOL: f64 = 1e-7;
/// Bound violation allowed on returned solutions.
pub const BOUND_TOL: f64 = 1e-9;
/// Distance from ±1 under which an LP value already counts as binary.
pub const INT_TOL: f64 = 1e-6;
/// Slack used when comparing a node bound against the incumbent.
pub const PRUNE_TOL: f64 = 1e-9;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const RATIO_TIE: f64 = 1e-12;
/// Bound violation a dual-simplex infeasibility proof must exceed.
const INFEASIBLE_MARGIN: f64 = 1e-6;
/// Warm starts are abandoned once a tableau has seen this many pivots.
const MAX_WARM_AGE: usize = 5000;

#[derive(Debug, thiserror::Error)]
pub enum OptError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("variable {index} has invalid bounds [{lower}, {upper}]")]
    Bounds { index: usize, lower: f64, upper: f64 },
    #[error("binary index {0} is out of range")]
    BinaryIndex(usize),
    #[error("simplex reported an unbounded ray although every variable is boxed")]
    Unbounded,
    #[error("simplex exceeded its iteration limit ({0} pivots)")]
    IterationLimit(usize),
}

/// A linear program in equality form with boxed variables.
#[derive(Debug, Clone)]
pub struct LpProblem {
    /// Minimized objective.
    pub objective: Vec<f64>,
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    pub fn new(
        objective: Vec<f64>,
        a: DMatrix<f64>,
        b: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self, OptError> {
        let p = Self { objective, a, b, lower, upper };
        p.validate()?;
        Ok(p)
    }

    /// Pure feasibility program (zero objective).
    pub fn feasibility(
        a: DMatrix<f64>,
        b: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self, OptError> {
        let n = a.ncols();
        Self::new(vec![0.0; n], a, b, lower, upper)
    }

    pub fn num_vars(&self) -> usize {
        self.a.ncols()
    }

    pub fn num_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn validate(&self) -> Result<(), OptError> {
        let n = self.a.ncols();
        if self.objective.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(OptError::Dimension(format!(
                "{n} columns but objective/lower/upper have lengths {}/{}/{}",
                self.objective.len(),
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.b.len() != self.a.nrows() {
            return Err(OptError::Dimension(format!(
                "{} rows but rhs has length {}",
                self.a.nrows(),
                self.b.len()
            )));
        }
        for (index, (&lower, &upper)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lower.is_finite() && upper.is_finite() && lower <= upper) {
                return Err(OptError::Bounds { index, lower, upper });
            }
        }
        Ok(())
    }

    /// Largest equality residual of `x`, in the original row scaling.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.a.nrows() {
            let mut acc = -self.b[i];
            for (j, xj) in x.iter().enumerate() {
                acc += self.a[(i, j)] * xj;
            }
            worst = worst.max(acc.abs());
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

/// An [`LpProblem`] with a subset of variables restricted to `{-1, +1}`.
#[derive(Debug, Clone)]
pub struct MilpProblem {
    pub lp: LpProblem,
    pub binaries: Vec<usize>,
}

impl MilpProblem {
    pub fn new(lp: LpProblem, mut binaries: Vec<usize>) -> Result<Self, OptError> {
        lp.validate()?;
        binaries.sort_unstable();
        binaries.dedup();
        if let Some(&k) = binaries.iter().find(|&&k| k >= lp.num_vars()) {
            return Err(OptError::BinaryIndex(k));
        }
        let mut lp = lp;
        for &k in &binaries {
            lp.lower[k] = lp.lower[k].max(-1.0);
            lp.upper[k] = lp.upper[k].min(1.0);
        }
        Ok(Self { lp, binaries })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: Status,
    pub solution: Option<Vec<f64>>,
    pub objective: Option<f64>,
}

impl SolveResult {
    fn infeasible() -> Self {
        Self { status: Status::Infeasible, solution: None, objective: None }
    }

    fn optimal(x: Vec<f64>, objective: f64) -> Self {
        Self { status: Status::Optimal, solution: Some(x), objective: Some(objective) }
    }

    pub fn is_feasible(&self) -> bool {
        self.status == Status::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
}

/// Dense tableau for the bounded-variable simplex. Columns are the
/// structural variables followed by one artificial per row.
#[derive(Clone)]
struct Tableau {
    m: usize,
    n: usize,
    cols: usize,
    tab: Vec<f64>,
    /// Value of the basic variable of each row.
    beta: Vec<f64>,
    basis: Vec<usize>,
    /// Values of nonbasic variables (entries of basic variables are stale).
    x: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    state: Vec<VarState>,
    d: Vec<f64>,
    /// Scaled constraint data, kept for basis refactorization.
    a: DMatrix<f64>,
    b: Vec<f64>,
    art_sign: Vec<f64>,
    pivots: usize,
    max_pivots: usize,
    /// Pivots since the tableau was built from scratch.
    age: usize,
}

impl Tableau {
    fn new(p: &LpProblem) -> Self {
        let m = p.num_rows();
        let n = p.num_vars();
        let cols = n + m;

        // Row equilibration: divide each row by its largest magnitude.
        let mut a = p.a.clone();
        let mut b = p.b.clone();
        for i in 0..m {
            let s = (0..n).map(|j| a[(i, j)].abs()).fold(0.0, f64::max);
            if s > 0.0 {
                for j in 0..n {
                    a[(i, j)] /= s;
                }
                b[i] /= s;
            }
        }

        let mut lo = p.lower.clone();
        let mut up = p.upper.clone();
        lo.extend(std::iter::repeat_n(0.0, m));
        up.extend(std::iter::repeat_n(f64::INFINITY, m));

        let mut x = vec![0.0; cols];
        x[..n].copy_from_slice(&p.lower);

        let mut tab = vec![0.0; m * cols];
        let mut beta = vec![0.0; m];
        let mut art_sign = vec![1.0; m];
        for i in 0..m {
            let mut r = b[i];
            for j in 0..n {
                r -= a[(i, j)] * x[j];
            }
            let s = if r >= 0.0 { 1.0 } else { -1.0 };
            art_sign[i] = s;
            let row = &mut tab[i * cols..(i + 1) * cols];
            for j in 0..n {
                row[j] = s * a[(i, j)];
            }
            row[n + i] = 1.0;
            beta[i] = r.abs();
        }

        let mut state = vec![VarState::AtLower; cols];
        let basis: Vec<usize> = (0..m).map(|i| n + i).collect();
        for &k in &basis {
            state[k] = VarState::Basic;
        }

        // Phase-1 reduced costs: artificials cost 1.
        let mut d = vec![0.0; cols];
        for (j, dj) in d.iter_mut().enumerate().take(n) {
            let mut acc = 0.0;
            for i in 0..m {
                acc += tab[i * cols + j];
            }
            *dj = -acc;
        }

        Self {
            m,
            n,
            cols,
            tab,
            beta,
            basis,
            x,
            lo,
            up,
            state,
            d,
            a,
            b,
            art_sign,
            pivots: 0,
            max_pivots: 200 * (m + n) + 2000,
            age: 0,
        }
    }

    fn set_costs(&mut self, cost: &[f64]) {
        for j in 0..self.cols {
            let cj = if j < self.n { cost[j] } else { 0.0 };
            let mut acc = cj;
            for i in 0..self.m {
                let cb = if self.basis[i] < self.n { cost[self.basis[i]] } else { 0.0 };
                if cb != 0.0 {
                    acc -= cb * self.tab[i * self.cols + j];
                }
            }
            self.d[j] = if self.state[j] == VarState::Basic { 0.0 } else { acc };
        }
    }

    /// Runs simplex iterations until no improving column remains.
    fn optimize(&mut self) -> Result<(), OptError> {
        loop {
            // Bland: smallest eligible index enters.
            let mut entering = None;
            for j in 0..self.cols {
                match self.state[j] {
                    VarState::AtLower if self.d[j] < -COST_TOL && self.up[j] > self.lo[j] => {
                        entering = Some((j, 1.0));
                        break;
                    }
                    VarState::AtUpper if self.d[j] > COST_TOL && self.up[j] > self.lo[j] => {
                        entering = Some((j, -1.0));
                        break;
                    }
                    _ => {}
                }
            }
            let Some((j, dir)) = entering else {
                return Ok(());
            };
            if self.pivots >= self.max_pivots {
                return Err(OptError::IterationLimit(self.pivots));
            }
            self.pivots += 1;
            self.age += 1;

            let mut theta = self.up[j] - self.lo[j];
            let mut leave: Option<usize> = None;
            for i in 0..self.m {
                let a = self.tab[i * self.cols + j] * dir;
                let k = self.basis[i];
                let lim = if a > PIVOT_TOL {
                    (self.beta[i] - self.lo[k]).max(0.0) / a
                } else if a < -PIVOT_TOL && self.up[k].is_finite() {
                    (self.up[k] - self.beta[i]).max(0.0) / (-a)
                } else {
                    continue;
                };
                let better = if lim < theta - RATIO_TIE {
                    true
                } else if lim <= theta + RATIO_TIE {
                    match leave {
                        Some(r) => k < self.basis[r],
                        None => k < j,
                    }
                } else {
                    false
                };
                if better {
                    theta = lim;
                    leave = Some(i);
                }
            }
            if !theta.is_finite() {
                return Err(OptError::Unbounded);
            }

            let step = dir * theta;
            for i in 0..self.m {
                let t = self.tab[i * self.cols + j];
                if t != 0.0 {
                    self.beta[i] -= t * step;
                }
            }
            let entering_value = self.x[j] + step;

            match leave {
                None => {
                    // Bound flip.
                    if dir > 0.0 {
                        self.state[j] = VarState::AtUpper;
                        self.x[j] = self.up[j];
                    } else {
                        self.state[j] = VarState::AtLower;
                        self.x[j] = self.lo[j];
                    }
                }
                Some(r) => {
                    let k = self.basis[r];
                    let a = self.tab[r * self.cols + j] * dir;
                    if a > 0.0 {
                        self.state[k] = VarState::AtLower;
                        self.x[k] = self.lo[k];
                    } else {
                        self.state[k] = VarState::AtUpper;
                        self.x[k] = self.up[k];
                    }
                    self.pivot(r, j);
                    self.basis[r] = j;
                    self.state[j] = VarState::Basic;
                    self.beta[r] = entering_value;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols;
        let piv = self.tab[r * cols + j];
        {
            let row = &mut self.tab[r * cols..(r + 1) * cols];
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[j] = 1.0;
        }
        let pivot_row: Vec<f64> = self.tab[r * cols..(r + 1) * cols].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.tab[i * cols + j];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.tab[i * cols..(i + 1) * cols];
            for (v, pr) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
            row[j] = 0.0;
        }
        let f = self.d[j];
        if f != 0.0 {
            for (v, pr) in self.d.iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
            self.d[j] = 0.0;
        }
    }

    /// Recomputes basic values from the scaled data with a fresh LU solve,
    /// discarding drift accumulated in the tableau.
    fn refactor(&mut self) {
        if self.m == 0 {
            return;
        }
        let mut bmat = DMatrix::<f64>::zeros(self.m, self.m);
        for (col, &k) in self.basis.iter().enumerate() {
            if k < self.n {
                for i in 0..self.m {
                    bmat[(i, col)] = self.a[(i, k)];
                }
            } else {
                let i = k - self.n;
                bmat[(i, col)] = self.art_sign[i];
            }
        }
        let mut rhs = DVector::from_vec(self.b.clone());
        for k in 0..self.cols {
            if self.state[k] == VarState::Basic {
                continue;
            }
            let v = self.x[k];
            if v == 0.0 {
                continue;
            }
            if k < self.n {
                for i in 0..self.m {
                    rhs[i] -= self.a[(i, k)] * v;
                }
            } else {
                let i = k - self.n;
                rhs[i] -= self.art_sign[i] * v;
            }
        }
        if let Some(sol) = bmat.lu().solve(&rhs) {
            if sol.iter().all(|v| v.is_finite()) {
                for i in 0..self.m {
                    self.beta[i] = sol[i];
                }
            }
        }
    }

    fn structural_values(&self) -> Vec<f64> {
        let mut x = self.x[..self.n].to_vec();
        for (i, &k) in self.basis.iter().enumerate() {
            if k < self.n {
                x[k] = self.beta[i];
            }
        }
        for (k, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lo[k], self.up[k]);
        }
        x
    }

    /// Moves structural bounds to `lower`/`upper`, keeping nonbasic
    /// variables on their bound and basic values consistent.
    fn rebound(&mut self, lower: &[f64], upper: &[f64]) {
        for j in 0..self.n {
            if self.lo[j] == lower[j] && self.up[j] == upper[j] {
                continue;
            }
            self.lo[j] = lower[j];
            self.up[j] = upper[j];
            let target = match self.state[j] {
                VarState::Basic => continue,
                VarState::AtLower => lower[j],
                VarState::AtUpper => upper[j],
            };
            let delta = target - self.x[j];
            if delta != 0.0 {
                for i in 0..self.m {
                    let t = self.tab[i * self.cols + j];
                    if t != 0.0 {
                        self.beta[i] -= t * delta;
                    }
                }
            }
            self.x[j] = target;
        }
    }

    fn worst_violation(&self) -> Option<(usize, f64)> {
        let mut out: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let k = self.basis[i];
            let v = (self.lo[k] - self.beta[i]).max(self.beta[i] - self.up[k]);
            if v > BOUND_TOL && out.is_none_or(|(_, w)| v > w) {
                out = Some((i, v));
            }
        }
        out
    }

    /// Bounded dual simplex from a dual-feasible basis. Restores primal
    /// feasibility while keeping reduced costs sign-correct.
    fn dual_simplex(&mut self) -> DualOutcome {
        let limit = 20 * (self.m + self.n) + 200;
        for _ in 0..limit {
            let Some((r, _)) = self.worst_violation() else {
                return DualOutcome::Feasible;
            };
            let k = self.basis[r];
            let below = self.beta[r] < self.lo[k];
            let mut best: Option<(usize, f64, f64)> = None;
            for j in 0..self.cols {
                if self.state[j] == VarState::Basic || self.up[j] <= self.lo[j] {
                    continue;
                }
                let a = self.tab[r * self.cols + j];
                let eligible = match (below, self.state[j]) {
                    (true, VarState::AtLower) | (false, VarState::AtUpper) => a < -PIVOT_TOL,
                    _ => a > PIVOT_TOL,
                };
                if !eligible {
                    continue;
                }
                let ratio = self.d[j].abs() / a.abs();
                let better = match best {
                    None => true,
                    Some((_, br, ba)) => ratio < br - RATIO_TIE || (ratio <= br + RATIO_TIE && a.abs() > ba),
                };
                if better {
                    best = Some((j, ratio, a.abs()));
                }
            }
            let Some((j, _, _)) = best else {
                // Confirm against a fresh factorization before trusting it.
                self.refactor();
                let k = self.basis[r];
                let v = (self.lo[k] - self.beta[r]).max(self.beta[r] - self.up[k]);
                return if v > INFEASIBLE_MARGIN { DualOutcome::Infeasible } else { DualOutcome::Stalled };
            };
            self.pivots += 1;
            self.age += 1;
            let bound = if below { self.lo[k] } else { self.up[k] };
            let a = self.tab[r * self.cols + j];
            let delta = (self.beta[r] - bound) / a;
            for i in 0..self.m {
                let t = self.tab[i * self.cols + j];
                if t != 0.0 {
                    self.beta[i] -= t * delta;
                }
            }
            let entering_value = self.x[j] + delta;
            self.state[k] = if below { VarState::AtLower } else { VarState::AtUpper };
            self.x[k] = bound;
            self.pivot(r, j);
            self.basis[r] = j;
            self.state[j] = VarState::Basic;
            self.beta[r] = entering_value;
        }
        DualOutcome::Stalled
    }

    /// Freezes artificials at zero for phase 2.
    fn drop_artificials(&mut self) {
        for k in self.n..self.cols {
            self.up[k] = 0.0;
            self.lo[k] = 0.0;
            if self.state[k] != VarState::Basic {
                self.state[k] = VarState::AtLower;
                self.x[k] = 0.0;
            }
        }
        for i in 0..self.m {
            if self.basis[i] >= self.n {
                self.beta[i] = 0.0;
            }
        }
    }
}

enum DualOutcome {
    Feasible,
    Infeasible,
    Stalled,
}

/// Solves a bounded LP to a vertex optimum or proves it infeasible.
pub fn lp_solve(p: &LpProblem) -> Result<SolveResult, OptError> {
    p.validate()?;
    Ok(solve_cold(p)?.0)
}

/// Two-phase solve from scratch. The final tableau is returned for warm
/// starts when the program is feasible.
fn solve_cold(p: &LpProblem) -> Result<(SolveResult, Option<Tableau>), OptError> {
    let mut t = Tableau::new(p);
    t.optimize()?;
    t.refactor();
    let x = t.structural_values();
    if p.residual(&x) > FEAS_TOL {
        return Ok((SolveResult::infeasible(), None));
    }
    t.drop_artificials();
    t.set_costs(&p.objective);
    if p.objective.iter().any(|&c| c != 0.0) {
        t.optimize()?;
        t.refactor();
    }
    finish(p, t)
}

fn finish(p: &LpProblem, t: Tableau) -> Result<(SolveResult, Option<Tableau>), OptError> {
    let x = t.structural_values();
    if p.residual(&x) > FEAS_TOL {
        // Phase 2 drifted; the phase-1 point is still a certificate of
        // feasibility, but we cannot vouch for optimality of this one.
        return Ok((SolveResult::infeasible(), None));
    }
    let obj = p.objective_value(&x);
    Ok((SolveResult::optimal(x, obj), Some(t)))
}

/// Re-solves `p` from the optimal tableau of a program that differs only in
/// variable bounds. Falls back to a cold solve when the warm path stalls,
/// drifts or has aged past [`MAX_WARM_AGE`] pivots.
fn solve_warm(p: &LpProblem, parent: &Tableau) -> Result<(SolveResult, Option<Tableau>), OptError> {
    if parent.age > MAX_WARM_AGE {
        return solve_cold(p);
    }
    let mut t = parent.clone();
    t.pivots = 0;
    t.rebound(&p.lower, &p.upper);
    match t.dual_simplex() {
        DualOutcome::Infeasible => return Ok((SolveResult::infeasible(), None)),
        DualOutcome::Stalled => return solve_cold(p),
        DualOutcome::Feasible => {}
    }
    if t.optimize().is_err() {
        return solve_cold(p);
    }
    t.refactor();
    let x = t.structural_values();
    if p.residual(&x) > FEAS_TOL {
        return solve_cold(p);
    }
    finish(p, t)
}

fn solve_from(p: &LpProblem, warm: Option<&Tableau>) -> Result<(SolveResult, Option<Tableau>), OptError> {
    match warm {
        Some(t) => solve_warm(p, t),
        None => solve_cold(p),
    }
}

fn is_binary_value(v: f64) -> bool {
    (v - 1.0).abs() <= INT_TOL || (v + 1.0).abs() <= INT_TOL
}

/// Solves `lp` with every binary fixed at the rounded value found in `x`.
fn polish(
    p: &MilpProblem,
    lower: &[f64],
    upper: &[f64],
    x: &[f64],
    warm: Option<&Tableau>,
) -> Result<SolveResult, OptError> {
    let mut lp = p.lp.clone();
    lp.lower.copy_from_slice(lower);
    lp.upper.copy_from_slice(upper);
    for &k in &p.binaries {
        let v = if x[k] >= 0.0 { 1.0 } else { -1.0 };
        lp.lower[k] = v;
        lp.upper[k] = v;
    }
    let (mut res, _) = solve_from(&lp, warm)?;
    if let Some(sol) = res.solution.as_mut() {
        for &k in &p.binaries {
            sol[k] = if sol[k] >= 0.0 { 1.0 } else { -1.0 };
        }
        res.objective = Some(p.lp.objective_value(sol));
    }
    Ok(res)
}

/// A branch-and-bound node: its bounds plus the parent's final tableau.
struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    warm: Option<Rc<Tableau>>,
}

impl Node {
    fn root(lp: &LpProblem) -> Self {
        Self { lower: lp.lower.clone(), upper: lp.upper.clone(), warm: None }
    }

    /// Children fixing `k` to `-1` and `+1`, in that order.
    fn split(self, k: usize, warm: Option<Rc<Tableau>>) -> (Node, Node) {
        let mut up = Node { lower: self.lower.clone(), upper: self.upper.clone(), warm: warm.clone() };
        up.lower[k] = 1.0;
        up.upper[k] = 1.0;
        let mut down = Node { lower: self.lower, upper: self.upper, warm };
        down.lower[k] = -1.0;
        down.upper[k] = -1.0;
        (down, up)
    }

    fn solve(&self, base: &LpProblem) -> Result<(SolveResult, Option<Tableau>), OptError> {
        let mut lp = base.clone();
        lp.lower.clone_from(&self.lower);
        lp.upper.clone_from(&self.upper);
        solve_from(&lp, self.warm.as_deref())
    }
}

/// Exact MILP solve by depth-first branch-and-bound.
///
/// Branches on the lowest-index binary whose relaxation value is not
/// within [`INT_TOL`] of ±1, exploring the `-1` child first. Children are
/// warm-started from the parent's optimal basis. A pure feasibility
/// program (all-zero objective) stops at the first integer-feasible leaf.
pub fn milp_solve(p: &MilpProblem) -> Result<SolveResult, OptError> {
    p.lp.validate()?;
    let feasibility_only = p.lp.objective.iter().all(|&c| c == 0.0);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut stack = vec![Node::root(&p.lp)];

    while let Some(node) = stack.pop() {
        let (res, tableau) = node.solve(&p.lp)?;
        let (Some(x), Some(obj)) = (res.solution, res.objective) else {
            continue;
        };
        if let Some((incumbent, _)) = &best {
            if obj >= incumbent - PRUNE_TOL {
                continue;
            }
        }

        let fractional = p.binaries.iter().copied().find(|&k| !is_binary_value(x[k]));
        let branch_var = match fractional {
            Some(k) => Some(k),
            None => {
                let polished = polish(p, &node.lower, &node.upper, &x, tableau.as_ref())?;
                match (polished.solution, polished.objective) {
                    (Some(sol), Some(val)) => {
                        let improves = best.as_ref().is_none_or(|(b, _)| val < *b - PRUNE_TOL);
                        if improves {
                            best = Some((val, sol));
                        }
                        if feasibility_only {
                            break;
                        }
                        None
                    }
                    // Rounding broke feasibility: keep splitting on a free binary.
                    _ => p.binaries.iter().copied().find(|&k| node.lower[k] < node.upper[k]),
                }
            }
        };

        if let Some(k) = branch_var {
            let (down, up) = node.split(k, tableau.map(Rc::new));
            stack.push(up);
            stack.push(down);
        }
    }

    Ok(match best {
        Some((val, sol)) => SolveResult::optimal(sol, val),
        None => SolveResult::infeasible(),
    })
}

/// Collects every binary assignment (in `{-1, 1}`) for which the remaining
/// LP is feasible, in depth-first order with `-1` first. Returns `None` when
/// more than `limit` assignments exist.
pub fn feasible_assignments(p: &MilpProblem, limit: usize) -> Result<Option<Vec<Vec<f64>>>, OptError> {
    let mut base = p.lp.clone();
    base.objective.iter_mut().for_each(|c| *c = 0.0);
    let mut found = Vec::new();
    let mut stack = vec![Node::root(&base)];
    while let Some(node) = stack.pop() {
        let (res, tableau) = node.solve(&base)?;
        if !res.is_feasible() {
            continue;
        }
        match p.binaries.iter().copied().find(|&k| node.lower[k] < node.upper[k]) {
            Some(k) => {
                let (down, up) = node.split(k, tableau.map(Rc::new));
                stack.push(up);
                stack.push(down);
            }
            None => {
                if found.len() == limit {
                    return Ok(None);
                }
                found.push(p.binaries.iter().map(|&k| node.lower[k]).collect());
            }
        }
    }
    Ok(Some(found))
}
