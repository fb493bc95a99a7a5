//! State-pair sets of the closed loop and the reachable sets derived from
//! them.
//!
//! `S_{x,t}` holds the pairs `(x_1, x_t)` for `x_1` in the domain. It is built
//! layer by layer without unrolling: each hidden layer at step `t ≥ 2` reads
//! the constrained product of its own previous output and the current output
//! of the layer below, which works because every set is obtained from its
//! predecessors by appending factors and constraints.

use serde::Serialize;

use crate::bounds::{propagate_intervals, BoundsTable, LayerRef, NeuronId};
use crate::error::{Error, Result};
use crate::hz::{select_first, select_last, ComplexityRecord, HullMode, HybridZonotope, Mat, Vector};
use crate::interval::IntervalVector;
use crate::model::ClosedLoopRnn;
use crate::relu_graph::{relu_layer_graph, NeuronInterval, ReluLabel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanEntry {
    pub id: NeuronId,
    pub alpha: f64,
    pub beta: f64,
    pub score: f64,
    pub label: ReluLabel,
}

/// Ranked unstable neurons over the whole horizon, the top `binary_limit`
/// labelled exact. Neurons not listed are stable and always exact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxationPlan {
    pub entries: Vec<PlanEntry>,
    pub binary_limit: usize,
}

impl RelaxationPlan {
    /// A plan that encodes every neuron exactly.
    pub fn exact() -> Self {
        Self { entries: Vec::new(), binary_limit: usize::MAX }
    }

    pub fn label(&self, id: &NeuronId) -> ReluLabel {
        self.entries.iter().find(|e| e.id == *id).map_or(ReluLabel::Exact, |e| e.label)
    }

    pub fn is_all_exact(&self) -> bool {
        self.entries.iter().all(|e| e.label == ReluLabel::Exact)
    }

    pub fn num_exact(&self) -> usize {
        self.entries.iter().filter(|e| e.label == ReluLabel::Exact).count()
    }
}

/// Scores every unstable neuron of the table by its triangle area, sorts
/// descending (ties by ascending `(t, layer, i)`) and labels the first
/// `binary_limit` exact.
pub fn rank_unstable(tbl: &BoundsTable, binary_limit: usize) -> RelaxationPlan {
    let mut entries: Vec<PlanEntry> = tbl
        .unstable()
        .into_iter()
        .map(|(id, iv)| PlanEntry {
            id,
            alpha: iv.alpha,
            beta: iv.beta,
            score: iv.triangle_area(),
            label: ReluLabel::Relaxed,
        })
        .collect();
    entries.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.id.cmp(&b.id)));
    for e in entries.iter_mut().take(binary_limit) {
        e.label = ReluLabel::Exact;
    }
    RelaxationPlan { entries, binary_limit }
}

/// Where the ReLU input intervals come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalSource {
    /// The precomputed table only.
    Table,
    /// The hull of each pre-activation set, intersected with the table.
    SetHull(HullMode),
}

/// `S_{x,t}` with bookkeeping.
#[derive(Debug, Clone)]
pub struct StatePairSet {
    pub t: usize,
    /// Pairs `(x_1, x_t)` in `R^{2n}`.
    pub set: HybridZonotope,
    /// Unstable neurons encoded over steps `1..t-1`.
    pub unstable: usize,
    /// How many of those were encoded exactly.
    pub exact: usize,
}

impl StatePairSet {
    pub fn complexity(&self) -> ComplexityRecord {
        self.set.complexity()
    }
}

#[derive(Debug, Clone)]
pub struct ReachSeries {
    pub domain: HybridZonotope,
    /// `pairs[k]` is `S_{x,k+2}`.
    pub pairs: Vec<StatePairSet>,
    pub plan: RelaxationPlan,
    pub bounds: BoundsTable,
    pub source: IntervalSource,
}

impl ReachSeries {
    pub fn horizon(&self) -> usize {
        self.pairs.len() + 1
    }

    pub fn state_dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn pair(&self, t: usize) -> Result<&StatePairSet> {
        if t < 2 || t > self.horizon() {
            return Err(Error::StepOutOfRange { t, min: 2, max: self.horizon() });
        }
        Ok(&self.pairs[t - 2])
    }

    /// Whether every unstable neuron met during construction was exact.
    pub fn is_exact(&self) -> bool {
        self.pairs.last().is_none_or(|p| p.unstable == p.exact)
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct PairJson<'a> {
            t: usize,
            complexity: ComplexityRecord,
            unstable: usize,
            exact: usize,
            set: &'a HybridZonotope,
        }
        #[derive(Serialize)]
        struct SeriesJson<'a> {
            horizon: usize,
            source: IntervalSource,
            plan: &'a RelaxationPlan,
            domain: &'a HybridZonotope,
            pairs: Vec<PairJson<'a>>,
        }
        let j = SeriesJson {
            horizon: self.horizon(),
            source: self.source,
            plan: &self.plan,
            domain: &self.domain,
            pairs: self
                .pairs
                .iter()
                .map(|p| PairJson { t: p.t, complexity: p.complexity(), unstable: p.unstable, exact: p.exact, set: &p.set })
                .collect(),
        };
        serde_json::to_string_pretty(&j).expect("series serializes")
    }
}

/// Box enclosing `x`, used to seed the interval table.
pub fn domain_box(x: &HybridZonotope) -> Result<IntervalVector> {
    if x.n_c() == 0 {
        Ok(x.generator_hull())
    } else {
        x.interval_hull(HullMode::Exact)
    }
}

/// Intervals for the ReLU inputs of one layer.
fn layer_intervals(
    z: &HybridZonotope,
    tbl: &BoundsTable,
    t: usize,
    layer: LayerRef,
    source: IntervalSource,
) -> Result<Vec<NeuronInterval>> {
    let table = tbl.get(t, layer).expect("table covers every step below the horizon");
    let iv = match source {
        IntervalSource::Table => table.clone(),
        // Both enclosures are sound, so they overlap; rounding can only
        // make the overlap empty by a hair, in which case keep the table.
        IntervalSource::SetHull(mode) => z.interval_hull(mode)?.intersect(table).unwrap_or_else(|| table.clone()),
    };
    Ok(iv.lower.iter().zip(&iv.upper).map(|(&alpha, &beta)| NeuronInterval { alpha, beta }).collect())
}

struct LayerStep {
    output: HybridZonotope,
    unstable: usize,
    exact: usize,
}

fn relu_step(
    z: &HybridZonotope,
    tbl: &BoundsTable,
    plan: &RelaxationPlan,
    t: usize,
    layer: LayerRef,
    source: IntervalSource,
) -> Result<LayerStep> {
    let ivs = layer_intervals(z, tbl, t, layer, source)?;
    let labels: Vec<ReluLabel> = (0..ivs.len()).map(|i| plan.label(&NeuronId { t, layer, i })).collect();
    let unstable = ivs.iter().filter(|iv| iv.is_unstable()).count();
    let exact = ivs.iter().zip(&labels).filter(|(iv, l)| iv.is_unstable() && **l == ReluLabel::Exact).count();
    let g = relu_layer_graph(z, &ivs, &labels)?;
    Ok(LayerStep { output: g.output, unstable, exact })
}

/// State-pair sets `S_{x,2..=horizon}` over domain `x`.
pub fn state_pairs(
    m: &ClosedLoopRnn,
    x: &HybridZonotope,
    horizon: usize,
    plan: &RelaxationPlan,
    tbl: &BoundsTable,
    source: IntervalSource,
) -> Result<ReachSeries> {
    if horizon < 2 {
        return Err(Error::StepOutOfRange { t: horizon, min: 2, max: usize::MAX });
    }
    if x.dim() != m.state_dim() {
        return Err(Error::LengthMismatch { expected: m.state_dim(), found: x.dim() });
    }
    if tbl.horizon() < horizon {
        return Err(Error::InvalidArgument(format!(
            "interval table covers horizon {}, need {horizon}",
            tbl.horizon()
        )));
    }
    if x.is_empty()? {
        return Err(Error::EmptyDomain);
    }

    let big_l = m.num_layers();
    let mut prev: Vec<HybridZonotope> = Vec::new();
    let mut state = x.clone();
    let mut pairs = Vec::with_capacity(horizon - 1);
    let (mut unstable, mut exact) = (0, 0);

    for t in 1..horizon {
        let mut cur: Vec<HybridZonotope> = Vec::with_capacity(big_l);
        for l in 1..=big_l {
            let layer = m.layer(l);
            let below = if l == 1 { &state } else { &cur[l - 2] };
            let z = if t == 1 {
                below.affine_map(&layer.wx, &layer.vh)?
            } else {
                let s = prev[l - 1].constrained_product(below)?;
                let mut w = Mat::zeros(layer.width(), layer.wh.ncols() + layer.wx.ncols());
                w.view_mut((0, 0), layer.wh.shape()).copy_from(&layer.wh);
                w.view_mut((0, layer.wh.ncols()), layer.wx.shape()).copy_from(&layer.wx);
                s.affine_map(&w, &layer.vh)?
            };
            let step = relu_step(&z, tbl, plan, t, LayerRef::Hidden(l), source)?;
            unstable += step.unstable;
            exact += step.exact;
            cur.push(step.output);
        }
        let zy = cur[big_l - 1].affine_map(m.wy(), m.vy())?;
        let step = relu_step(&zy, tbl, plan, t, LayerRef::Output, source)?;
        unstable += step.unstable;
        exact += step.exact;
        state = step.output;
        let set = x.constrained_product(&state)?;
        pairs.push(StatePairSet { t: t + 1, set, unstable, exact });
        prev = cur;
    }

    Ok(ReachSeries { domain: x.clone(), pairs, plan: plan.clone(), bounds: tbl.clone(), source })
}

/// Convenience driver: interval table over the domain box, ranking with
/// `binary_limit`, and table intervals when the limit relaxes anything.
/// `None` means every neuron is exact and per-set hulls of `mode` are used.
pub fn compute_series(
    m: &ClosedLoopRnn,
    x: &HybridZonotope,
    horizon: usize,
    binary_limit: Option<usize>,
    mode: HullMode,
) -> Result<ReachSeries> {
    let hull = match domain_box(x) {
        Err(Error::EmptySet) => return Err(Error::EmptyDomain),
        r => r?,
    };
    let tbl = propagate_intervals(m, &hull, horizon)?;
    match binary_limit {
        None => state_pairs(m, x, horizon, &RelaxationPlan::exact(), &tbl, IntervalSource::SetHull(mode)),
        Some(nb) => state_pairs(m, x, horizon, &rank_unstable(&tbl, nb), &tbl, IntervalSource::Table),
    }
}

/// `[0 I]·(S_{x,t} ∩_{[I 0]} X1)`.
pub fn frs(series: &ReachSeries, x1: &HybridZonotope, t: usize) -> Result<HybridZonotope> {
    let n = series.state_dim();
    let s = &series.pair(t)?.set;
    s.generalized_intersect(x1, &select_first(n, 2 * n))?.project(n, n)
}

/// `[I 0]·(S_{x,t} ∩_{[0 I]} target)`.
pub fn brs(series: &ReachSeries, target: &HybridZonotope, t: usize) -> Result<HybridZonotope> {
    let n = series.state_dim();
    let s = &series.pair(t)?.set;
    s.generalized_intersect(target, &select_last(n, 2 * n))?.project(0, n)
}

/// Closed-form complexities of a pair set and the sets derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PredictedComplexity {
    pub pair: ComplexityRecord,
    pub frs: ComplexityRecord,
    pub brs: ComplexityRecord,
}

/// Counts for a pair set with `n_unstable` unstable neurons of which
/// `n_exact` are exact; `n_exact ≥ n_unstable` is the all-exact case.
pub fn predict_complexity(
    domain: ComplexityRecord,
    initial: ComplexityRecord,
    target: ComplexityRecord,
    n: usize,
    n_unstable: usize,
    n_exact: usize,
) -> PredictedComplexity {
    let e = n_exact.min(n_unstable);
    let pair = ComplexityRecord::new(
        domain.n_g + 5 * n_unstable - e,
        domain.n_b + e,
        domain.n_c + 3 * n_unstable,
    );
    let lift = ComplexityRecord::new(0, 0, n);
    PredictedComplexity { pair, frs: pair + initial + lift, brs: pair + target + lift }
}

/// Pairs `(x_1, x_t)` of a factor point of `series.pair(t)`.
pub fn split_pair(v: &Vector, n: usize) -> (Vec<f64>, Vec<f64>) {
    (v.rows(0, n).iter().copied().collect(), v.rows(n, n).iter().copied().collect())
}
