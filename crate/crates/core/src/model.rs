//! Closed-loop ReLU RNN: `L` stacked recurrent layers followed by a ReLU
//! output layer whose value is fed back as the next state.
//!
//! ```text
//! h_t^ℓ = σ(Wh^ℓ h_{t-1}^ℓ + Wx^ℓ h_t^{ℓ-1} + vh^ℓ),   h_t^0 = x_t,  h_0^ℓ = 0
//! x_{t+1} = σ(Wy h_t^L + vy)
//! ```

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RnnLayer {
    pub wh: DMatrix<f64>,
    pub wx: DMatrix<f64>,
    pub vh: DVector<f64>,
}

impl RnnLayer {
    pub fn width(&self) -> usize {
        self.vh.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopRnn {
    layers: Vec<RnnLayer>,
    wy: DMatrix<f64>,
    vy: DVector<f64>,
}

/// `σ(Σ_j w1[i,j] a[j] + Σ_j w2[i,j] b[j] + v[i])`, summed left to right.
fn relu_affine(w1: Option<(&DMatrix<f64>, &[f64])>, w2: (&DMatrix<f64>, &[f64]), v: &DVector<f64>) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            let mut acc = 0.0;
            if let Some((w, a)) = w1 {
                for (j, aj) in a.iter().enumerate() {
                    acc += w[(i, j)] * aj;
                }
            }
            let (w, b) = w2;
            for (j, bj) in b.iter().enumerate() {
                acc += w[(i, j)] * bj;
            }
            (acc + v[i]).max(0.0)
        })
        .collect()
}

fn model_err(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Model { field: field.into(), message: message.into() }
}

impl ClosedLoopRnn {
    pub fn new(layers: Vec<RnnLayer>, wy: DMatrix<f64>, vy: DVector<f64>) -> Result<Self> {
        let m = Self { layers, wy, vy };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let n = self.vy.len();
        if n == 0 {
            return Err(model_err("vy", "state dimension must be positive"));
        }
        if self.layers.is_empty() {
            return Err(model_err("layers", "at least one hidden layer is required"));
        }
        let mut prev = n;
        for (k, l) in self.layers.iter().enumerate() {
            let w = l.width();
            if l.wh.shape() != (w, w) {
                return Err(model_err(format!("layers[{k}].Wh"), format!("expected {w}x{w}, got {:?}", l.wh.shape())));
            }
            if l.wx.shape() != (w, prev) {
                return Err(model_err(
                    format!("layers[{k}].Wx"),
                    format!("expected {w}x{prev}, got {:?}", l.wx.shape()),
                ));
            }
            prev = w;
        }
        if self.wy.shape() != (n, prev) {
            return Err(model_err("Wy", format!("expected {n}x{prev}, got {:?}", self.wy.shape())));
        }
        let finite = self
            .layers
            .iter()
            .flat_map(|l| l.wh.iter().chain(l.wx.iter()).chain(l.vh.iter()))
            .chain(self.wy.iter())
            .chain(self.vy.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(model_err("weights", "all entries must be finite"));
        }
        Ok(())
    }

    pub fn state_dim(&self) -> usize {
        self.vy.len()
    }
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }
    pub fn layers(&self) -> &[RnnLayer] {
        &self.layers
    }
    pub fn layer(&self, l: usize) -> &RnnLayer {
        &self.layers[l - 1]
    }
    pub fn wy(&self) -> &DMatrix<f64> {
        &self.wy
    }
    pub fn vy(&self) -> &DVector<f64> {
        &self.vy
    }
    /// Width of layer `ℓ`; layer 0 is the state.
    pub fn width(&self, l: usize) -> usize {
        if l == 0 {
            self.state_dim()
        } else {
            self.layers[l - 1].width()
        }
    }

    pub fn zero_hidden(&self) -> Vec<Vec<f64>> {
        self.layers.iter().map(|l| vec![0.0; l.width()]).collect()
    }

    /// One closed-loop step from state `x` with previous hidden states `h`.
    /// Returns the next state and the updated hidden states.
    pub fn step(&self, x: &[f64], h: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        if x.len() != self.state_dim() {
            return Err(Error::LengthMismatch { expected: self.state_dim(), found: x.len() });
        }
        if h.len() != self.layers.len() {
            return Err(Error::LengthMismatch { expected: self.layers.len(), found: h.len() });
        }
        let mut below = x.to_vec();
        let mut next_h = Vec::with_capacity(self.layers.len());
        for (l, prev) in self.layers.iter().zip(h) {
            if prev.len() != l.width() {
                return Err(Error::LengthMismatch { expected: l.width(), found: prev.len() });
            }
            let cur = relu_affine(Some((&l.wh, prev)), (&l.wx, &below), &l.vh);
            next_h.push(cur.clone());
            below = cur;
        }
        let y = relu_affine(None, (&self.wy, &below), &self.vy);
        Ok((y, next_h))
    }

    /// Trajectory `x_1..x_T` from `x1` with zero initial hidden states.
    pub fn simulate(&self, x1: &[f64], steps: usize) -> Result<Trajectory> {
        if steps == 0 {
            return Err(Error::InvalidArgument("a trajectory needs at least one step".into()));
        }
        let mut states = vec![x1.to_vec()];
        let mut hidden = Vec::with_capacity(steps);
        let mut h = self.zero_hidden();
        for _ in 1..steps {
            let (next, nh) = self.step(states.last().expect("nonempty"), &h)?;
            hidden.push(nh.clone());
            h = nh;
            states.push(next);
        }
        // Hidden layers at step T are evaluated too, so π_h covers t = 1..T.
        let (_, nh) = self.step(states.last().expect("nonempty"), &h)?;
        hidden.push(nh);
        Ok(Trajectory { states, hidden })
    }

    /// State at step `t` (1-based) from `x1`.
    pub fn state_at(&self, x1: &[f64], t: usize) -> Result<Vec<f64>> {
        Ok(self.simulate(x1, t)?.states.pop().expect("nonempty"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelJson::from(self)).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let j: ModelJson = serde_json::from_str(text)?;
        j.try_into()
    }
}

/// States `x_1..x_T` and hidden snapshots `h_t^ℓ` for `t = 1..T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    /// `hidden[t-1][ℓ-1] = h_t^ℓ`.
    pub hidden: Vec<Vec<Vec<f64>>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `h_t^ℓ`; `ℓ = 0` gives the state `x_t`.
    pub fn hidden_at(&self, t: usize, l: usize) -> Result<&[f64]> {
        if t == 0 || t > self.states.len() {
            return Err(Error::StepOutOfRange { t, min: 1, max: self.states.len() });
        }
        if l == 0 {
            return Ok(&self.states[t - 1]);
        }
        let layers = &self.hidden[t - 1];
        layers
            .get(l - 1)
            .map(Vec::as_slice)
            .ok_or(Error::LayerOutOfRange { layer: l, max: layers.len() })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerJson {
    #[serde(rename = "Wh")]
    wh: Vec<Vec<f64>>,
    #[serde(rename = "Wx")]
    wx: Vec<Vec<f64>>,
    vh: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelJson {
    state_dim: usize,
    layers: Vec<LayerJson>,
    #[serde(rename = "Wy")]
    wy: Vec<Vec<f64>>,
    vy: Vec<f64>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Parses a row-major matrix; `cols` fixes the width when there are no rows.
fn matrix(field: &str, r: &[Vec<f64>], cols: usize) -> Result<DMatrix<f64>> {
    if r.iter().any(|row| row.len() != cols) {
        return Err(model_err(field, format!("every row must have {cols} entries")));
    }
    Ok(DMatrix::from_fn(r.len(), cols, |i, j| r[i][j]))
}

impl From<&ClosedLoopRnn> for ModelJson {
    fn from(m: &ClosedLoopRnn) -> Self {
        Self {
            state_dim: m.state_dim(),
            layers: m
                .layers
                .iter()
                .map(|l| LayerJson { wh: rows(&l.wh), wx: rows(&l.wx), vh: l.vh.iter().copied().collect() })
                .collect(),
            wy: rows(&m.wy),
            vy: m.vy.iter().copied().collect(),
        }
    }
}

impl TryFrom<ModelJson> for ClosedLoopRnn {
    type Error = Error;

    fn try_from(j: ModelJson) -> Result<Self> {
        let n = j.state_dim;
        if j.vy.len() != n {
            return Err(model_err("vy", format!("expected {n} entries, got {}", j.vy.len())));
        }
        let mut prev = n;
        let mut layers = Vec::with_capacity(j.layers.len());
        for (k, l) in j.layers.into_iter().enumerate() {
            let w = l.vh.len();
            let wh = matrix(&format!("layers[{k}].Wh"), &l.wh, w)?;
            let wx = matrix(&format!("layers[{k}].Wx"), &l.wx, prev)?;
            layers.push(RnnLayer { wh, wx, vh: DVector::from_vec(l.vh) });
            prev = w;
        }
        let wy = matrix("Wy", &j.wy, prev)?;
        ClosedLoopRnn::new(layers, wy, DVector::from_vec(j.vy))
    }
}

pub fn load_model(path: &Path) -> Result<ClosedLoopRnn> {
    ClosedLoopRnn::from_json(&std::fs::read_to_string(path)?)
}

pub fn save_model(m: &ClosedLoopRnn, path: &Path) -> Result<()> {
    std::fs::write(path, m.to_json())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn half() -> ClosedLoopRnn {
        ClosedLoopRnn::new(
            vec![RnnLayer {
                wh: DMatrix::zeros(1, 1),
                wx: DMatrix::from_element(1, 1, 1.0),
                vh: DVector::zeros(1),
            }],
            DMatrix::from_element(1, 1, 0.5),
            DVector::zeros(1),
        )
        .unwrap()
    }

    #[test]
    fn constant_output() {
        let m = ClosedLoopRnn::new(
            vec![RnnLayer { wh: DMatrix::zeros(3, 3), wx: DMatrix::zeros(3, 2), vh: DVector::zeros(3) }],
            DMatrix::zeros(2, 3),
            DVector::from_vec(vec![1.0, 2.0]),
        )
        .unwrap();
        let (y, _) = m.step(&[5.0, -7.0], &m.zero_hidden()).unwrap();
        assert_eq!(y, vec![1.0, 2.0]);
    }

    #[test]
    fn half_system_trajectory() {
        let m = half();
        assert_eq!(m.step(&[0.8], &m.zero_hidden()).unwrap().0, vec![0.4]);
        let tr = m.simulate(&[0.8], 3).unwrap();
        assert_eq!(tr.states, vec![vec![0.8], vec![0.4], vec![0.2]]);
        assert_eq!(m.simulate(&[0.8], 1).unwrap().states, vec![vec![0.8]]);
        assert_eq!(tr.hidden_at(1, 0).unwrap(), &[0.8]);
        assert_eq!(tr.hidden_at(2, 1).unwrap(), &[0.4]);
        assert!(tr.hidden_at(4, 0).is_err());
        assert!(tr.hidden_at(1, 2).is_err());
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let m = half();
        assert_eq!(ClosedLoopRnn::from_json(&m.to_json()).unwrap(), m);
        let err = ClosedLoopRnn::from_json(r#"{"state_dim":1,"layers":[{"Wh":[[0]],"Wx":[[1]],"vh":[0]}],"vy":[0]}"#)
            .unwrap_err();
        assert!(err.to_string().contains("Wy"), "{err}");
        let err = ClosedLoopRnn::from_json(
            r#"{"state_dim":1,"layers":[{"Wh":[[0]],"Wx":[[1, 2]],"vh":[0]}],"Wy":[[1]],"vy":[0]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("layers[0].Wx"), "{err}");
    }
}
