//! Safety of the closed loop against an unsafe set `O` over a horizon.
//!
//! Empty intersections at every step prove safety. A non-empty intersection
//! only counts as a violation once a concrete initial state has been
//! simulated into `O`; otherwise the verdict is [`Status::Unknown`].

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hz::{ComplexityRecord, FactorPoint, HybridZonotope, Vector};
use crate::model::ClosedLoopRnn;
use crate::reach::{brs, frs, ReachSeries};

/// Default tolerance for confirming that a simulated state lies in `O`.
pub const WITNESS_TOL: f64 = 1e-6;
/// Extra sampled candidates tried when the first witness does not confirm.
const WITNESS_RETRIES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Safe,
    Unsafe,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepEvidence {
    pub t: usize,
    pub empty: bool,
    /// Complexity of the intersection whose emptiness was decided.
    pub complexity: ComplexityRecord,
}

/// An initial state whose simulated step-`t` state lies in `O`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub t: usize,
    pub x1: Vec<f64>,
    pub xt: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SafetyVerdict {
    pub status: Status,
    pub route: Route,
    pub evidence: Vec<StepEvidence>,
    pub witnesses: Vec<Witness>,
    pub elapsed_ms: f64,
}

impl SafetyVerdict {
    /// First step with a confirmed violation.
    pub fn first_unsafe_step(&self) -> Option<usize> {
        self.witnesses.iter().map(|w| w.t).min()
    }
}

/// Simulates `x1` for `t` steps and keeps it if `x_t ∈ O`.
fn confirm(m: &ClosedLoopRnn, o: &HybridZonotope, x1: &[f64], t: usize, tol: f64) -> Result<Option<Witness>> {
    let xt = m.state_at(x1, t)?;
    Ok(o.contains_point(&xt, tol)?.is_some().then(|| Witness { t, x1: x1.to_vec(), xt }))
}

/// Initial state of a factor point of `w`, whose factors contain those of
/// the pair set `s` starting at `(off_c, off_b)`.
fn initial_state(s: &HybridZonotope, f: &FactorPoint, off_c: usize, off_b: usize) -> Vec<f64> {
    let sf = FactorPoint {
        xi_c: f.xi_c.rows(off_c, s.n_g()).into_owned(),
        xi_b: f.xi_b.rows(off_b, s.n_b()).into_owned(),
    };
    let pair: Vector = s.eval(&sf);
    pair.rows(0, s.dim() / 2).iter().copied().collect()
}

/// What a witness must be confirmed against.
struct Check<'a> {
    m: &'a ClosedLoopRnn,
    o: &'a HybridZonotope,
    tol: f64,
}

/// Searches `w` for an initial state that truly reaches `O` at step `t`.
/// `offsets` locates the pair set's factors inside `w`.
fn find_witness(
    c: &Check,
    w: &HybridZonotope,
    f: &FactorPoint,
    s: &HybridZonotope,
    offsets: (usize, usize),
    t: usize,
) -> Result<Option<Witness>> {
    let x1 = initial_state(s, f, offsets.0, offsets.1);
    if let Some(wit) = confirm(c.m, c.o, &x1, t, c.tol)? {
        return Ok(Some(wit));
    }
    for g in w.sample_factors(WITNESS_RETRIES, t as u64)? {
        let x1 = initial_state(s, &g, offsets.0, offsets.1);
        if let Some(wit) = confirm(c.m, c.o, &x1, t, c.tol)? {
            return Ok(Some(wit));
        }
    }
    Ok(None)
}

/// Step-1 check: `X1 ∩ O` must be empty before anything else.
fn initial_overlap(x1: &HybridZonotope, o: &HybridZonotope) -> Result<Option<Witness>> {
    let w = x1.intersect(o)?;
    Ok(w.feasible_factor()?.map(|f| {
        let p: Vec<f64> = w.eval(&f).iter().copied().collect();
        Witness { t: 1, x1: p.clone(), xt: p }
    }))
}

fn finish(route: Route, evidence: Vec<StepEvidence>, witnesses: Vec<Witness>, start: Instant) -> SafetyVerdict {
    let status = if evidence.iter().all(|e| e.empty) {
        Status::Safe
    } else if witnesses.is_empty() {
        Status::Unknown
    } else {
        Status::Unsafe
    };
    SafetyVerdict { status, route, evidence, witnesses, elapsed_ms: start.elapsed().as_secs_f64() * 1e3 }
}

fn unsafe_at_start(route: Route, wit: Witness, start: Instant) -> SafetyVerdict {
    let ev = StepEvidence { t: 1, empty: false, complexity: ComplexityRecord::default() };
    finish(route, vec![ev], vec![wit], start)
}

/// Checks `R_t(X1) ∩ O = ∅` for `t = 2..=T` on a series built over `X1`.
pub fn verify_forward(
    m: &ClosedLoopRnn,
    series: &ReachSeries,
    x1: &HybridZonotope,
    o: &HybridZonotope,
    tol: f64,
) -> Result<SafetyVerdict> {
    let start = Instant::now();
    if let Some(w) = initial_overlap(x1, o)? {
        return Ok(unsafe_at_start(Route::Forward, w, start));
    }
    let mut evidence = Vec::new();
    let mut witnesses = Vec::new();
    for t in 2..=series.horizon() {
        let s = &series.pair(t)?.set;
        let w = frs(series, x1, t)?.intersect(o)?;
        let f = w.feasible_factor()?;
        evidence.push(StepEvidence { t, empty: f.is_none(), complexity: w.complexity() });
        if let Some(f) = f {
            // Factors of w: O's, then X1's, then the pair set's.
            let off = (o.n_g() + x1.n_g(), o.n_b() + x1.n_b());
            witnesses.extend(find_witness(&Check { m, o, tol }, &w, &f, s, off, t)?);
        }
    }
    Ok(finish(Route::Forward, evidence, witnesses, start))
}

/// Checks `P_t(O) ∩ X1 = ∅` for `t = 2..=T` on a series built over a domain
/// containing `X1`.
pub fn verify_backward(
    m: &ClosedLoopRnn,
    series: &ReachSeries,
    o: &HybridZonotope,
    x1: &HybridZonotope,
    tol: f64,
) -> Result<SafetyVerdict> {
    let start = Instant::now();
    if let Some(w) = initial_overlap(x1, o)? {
        return Ok(unsafe_at_start(Route::Backward, w, start));
    }
    let mut evidence = Vec::new();
    let mut witnesses = Vec::new();
    for t in 2..=series.horizon() {
        let s = &series.pair(t)?.set;
        let w = brs(series, o, t)?.intersect(x1)?;
        let f = w.feasible_factor()?;
        evidence.push(StepEvidence { t, empty: f.is_none(), complexity: w.complexity() });
        if let Some(f) = f {
            // Factors of w: X1's, then O's, then the pair set's.
            let off = (x1.n_g() + o.n_g(), x1.n_b() + o.n_b());
            witnesses.extend(find_witness(&Check { m, o, tol }, &w, &f, s, off, t)?);
        }
    }
    Ok(finish(Route::Backward, evidence, witnesses, start))
}

/// Initial states in `X1` reaching `O` at step `t`, with the reachable sets
/// of the sequences they generate.
#[derive(Debug, Clone)]
pub struct UnsafeSequenceSet {
    pub t: usize,
    /// `P_t(O) ∩ X1`.
    pub seeds: HybridZonotope,
    /// `R_k(seeds)` for `k = 2..=t`.
    pub images: Vec<HybridZonotope>,
    /// Sampled seeds and their simulated states `x_1..x_t`.
    pub samples: Vec<Vec<Vec<f64>>>,
}

impl UnsafeSequenceSet {
    /// Whether every sampled sequence ends in `O` within `tol`.
    pub fn all_samples_reach(&self, o: &HybridZonotope, tol: f64) -> Result<bool> {
        for s in &self.samples {
            if o.contains_point(s.last().expect("nonempty"), tol)?.is_none() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

pub fn unsafe_sequences(
    m: &ClosedLoopRnn,
    series: &ReachSeries,
    o: &HybridZonotope,
    x1: &HybridZonotope,
    t: usize,
    samples: usize,
    seed: u64,
) -> Result<UnsafeSequenceSet> {
    let seeds = brs(series, o, t)?.intersect(x1)?;
    if seeds.is_empty()? {
        return Err(Error::EmptySeed { t });
    }
    let images = (2..=t).map(|k| frs(series, &seeds, k)).collect::<Result<Vec<_>>>()?;
    let samples = seeds
        .sample_points(samples, seed)?
        .iter()
        .map(|x| Ok(m.simulate(x.as_slice(), t)?.states))
        .collect::<Result<Vec<_>>>()?;
    Ok(UnsafeSequenceSet { t, seeds, images, samples })
}
