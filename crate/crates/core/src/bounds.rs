//! Interval enclosures of every pre-activation over a horizon, obtained by
//! plain interval arithmetic from a box containing the state domain.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hz::{HullMode, HybridZonotope};
use crate::interval::IntervalVector;
use crate::model::ClosedLoopRnn;
use crate::relu_graph::NeuronInterval;

/// A ReLU layer of the unrolled closed loop. Hidden layers precede the
/// output layer within a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerRef {
    /// Hidden layer `ℓ ≥ 1`.
    Hidden(usize),
    Output,
}

impl std::fmt::Display for LayerRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LayerRef::Hidden(l) => write!(f, "h{l}"),
            LayerRef::Output => write!(f, "y"),
        }
    }
}

/// Neuron `i` of `layer` at step `t`. Orders by `(t, layer, i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NeuronId {
    pub t: usize,
    pub layer: LayerRef,
    pub i: usize,
}

/// Pre-activation intervals for steps `1..=horizon - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsTable {
    horizon: usize,
    hidden: BTreeMap<(usize, usize), IntervalVector>,
    output: BTreeMap<usize, IntervalVector>,
}

impl BoundsTable {
    /// The `T` the table was built for; it covers steps `1..T`.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn get(&self, t: usize, layer: LayerRef) -> Option<&IntervalVector> {
        match layer {
            LayerRef::Hidden(l) => self.hidden.get(&(t, l)),
            LayerRef::Output => self.output.get(&t),
        }
    }

    /// Per-neuron intervals of a layer.
    pub fn neurons(&self, t: usize, layer: LayerRef) -> Option<Vec<NeuronInterval>> {
        self.get(t, layer)
            .map(|iv| iv.lower.iter().zip(&iv.upper).map(|(&alpha, &beta)| NeuronInterval { alpha, beta }).collect())
    }

    /// Every `(t, layer)` in step-then-layer order.
    pub fn layers(&self) -> Vec<(usize, LayerRef)> {
        let hidden_per_step = self.hidden.keys().filter(|(t, _)| *t == 1).count();
        (1..self.horizon)
            .flat_map(|t| (1..=hidden_per_step).map(move |l| (t, LayerRef::Hidden(l))).chain([(t, LayerRef::Output)]))
            .collect()
    }

    /// Unstable neurons with their intervals, in `(t, layer, i)` order.
    pub fn unstable(&self) -> Vec<(NeuronId, NeuronInterval)> {
        let mut out = Vec::new();
        for (t, layer) in self.layers() {
            for (i, iv) in self.neurons(t, layer).unwrap_or_default().into_iter().enumerate() {
                if iv.is_unstable() {
                    out.push((NeuronId { t, layer, i }, iv));
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump<'a> {
            hidden: BTreeMap<String, &'a IntervalVector>,
            output: BTreeMap<String, &'a IntervalVector>,
        }
        let dump = Dump {
            hidden: self.hidden.iter().map(|((t, l), iv)| (format!("{t},{l}"), iv)).collect(),
            output: self.output.iter().map(|(t, iv)| (t.to_string(), iv)).collect(),
        };
        serde_json::to_string_pretty(&dump).expect("intervals serialize")
    }
}

/// Interval propagation of the box `x` through `horizon - 1` closed-loop
/// steps, starting from zero hidden states.
pub fn propagate_intervals(m: &ClosedLoopRnn, x: &IntervalVector, horizon: usize) -> Result<BoundsTable> {
    if horizon < 2 {
        return Err(Error::StepOutOfRange { t: horizon, min: 2, max: usize::MAX });
    }
    if x.dim() != m.state_dim() {
        return Err(Error::LengthMismatch { expected: m.state_dim(), found: x.dim() });
    }
    let mut hidden = BTreeMap::new();
    let mut output = BTreeMap::new();
    let mut h: Vec<IntervalVector> = m.layers().iter().map(|l| IntervalVector::zeros(l.width())).collect();
    let mut state = x.clone();
    for t in 1..horizon {
        let mut below = state;
        for (k, layer) in m.layers().iter().enumerate() {
            let w = layer.width();
            let mut lower = layer.vh.iter().copied().collect::<Vec<_>>();
            let mut upper = lower.clone();
            h[k].accumulate_product(&layer.wh, &mut lower, &mut upper);
            below.accumulate_product(&layer.wx, &mut lower, &mut upper);
            debug_assert_eq!(lower.len(), w);
            let pre = IntervalVector { lower, upper };
            h[k] = pre.relu();
            below = h[k].clone();
            hidden.insert((t, k + 1), pre);
        }
        let pre = below.affine_image(m.wy(), m.vy());
        state = pre.relu();
        output.insert(t, pre);
    }
    Ok(BoundsTable { horizon, hidden, output })
}

/// Interval hull of a set; see [`HybridZonotope::interval_hull`].
pub fn hull_of_hz(z: &HybridZonotope, mode: HullMode) -> Result<IntervalVector> {
    z.interval_hull(mode)
}

/// `N_t`: unstable neurons over steps `1..t-1`, all layers.
pub fn count_unstable(tbl: &BoundsTable, t: usize) -> Result<usize> {
    if t < 1 || t > tbl.horizon {
        return Err(Error::StepOutOfRange { t, min: 1, max: tbl.horizon });
    }
    Ok(tbl.unstable().iter().filter(|(id, _)| id.t < t).count())
}
