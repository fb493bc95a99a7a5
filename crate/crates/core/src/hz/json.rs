//! JSON form: an object with keys `c`, `Gc`, `Gb`, `Ac`, `Ab`, `b`, matrices
//! as row-major nested arrays. A missing matrix key means the matrix has a
//! zero dimension; its shape is implied by the other entries.

use serde::{Deserialize, Serialize};

use super::{HybridZonotope, Mat, Vector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct HzJson {
    pub c: Vec<f64>,
    #[serde(rename = "Gc", default, skip_serializing_if = "Option::is_none")]
    pub gc: Option<Vec<Vec<f64>>>,
    #[serde(rename = "Gb", default, skip_serializing_if = "Option::is_none")]
    pub gb: Option<Vec<Vec<f64>>>,
    #[serde(rename = "Ac", default, skip_serializing_if = "Option::is_none")]
    pub ac: Option<Vec<Vec<f64>>>,
    #[serde(rename = "Ab", default, skip_serializing_if = "Option::is_none")]
    pub ab: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
}

fn rows_of(m: &Mat) -> Option<Vec<Vec<f64>>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return None;
    }
    Some(m.row_iter().map(|r| r.iter().copied().collect()).collect())
}

fn width(rows: &Option<Vec<Vec<f64>>>) -> Option<usize> {
    rows.as_ref().and_then(|r| r.first()).map(Vec::len)
}

fn matrix(name: &str, rows: &Option<Vec<Vec<f64>>>, nrows: usize, ncols: usize) -> Result<Mat> {
    let Some(rows) = rows else {
        return Ok(Mat::zeros(nrows, ncols));
    };
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension(format!("`{name}` must be {nrows}x{ncols}")));
    }
    Ok(Mat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl From<&HybridZonotope> for HzJson {
    fn from(z: &HybridZonotope) -> Self {
        Self {
            c: z.c.iter().copied().collect(),
            gc: rows_of(&z.gc),
            gb: rows_of(&z.gb),
            ac: rows_of(&z.ac),
            ab: rows_of(&z.ab),
            b: (z.n_c() > 0).then(|| z.b.iter().copied().collect()),
        }
    }
}

impl TryFrom<HzJson> for HybridZonotope {
    type Error = Error;

    fn try_from(j: HzJson) -> Result<Self> {
        let n = j.c.len();
        let b = j.b.unwrap_or_default();
        let nc = b.len();
        let ng = width(&j.gc).or(width(&j.ac)).unwrap_or(0);
        let nb = width(&j.gb).or(width(&j.ab)).unwrap_or(0);
        if j.c.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::Dimension("non-finite entry in `c` or `b`".into()));
        }
        Self::new(
            matrix("Gc", &j.gc, n, ng)?,
            matrix("Gb", &j.gb, n, nb)?,
            Vector::from_vec(j.c),
            matrix("Ac", &j.ac, nc, ng)?,
            matrix("Ab", &j.ab, nc, nb)?,
            Vector::from_vec(b),
        )
    }
}

impl Serialize for HybridZonotope {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HzJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for HybridZonotope {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        HzJson::deserialize(d)?.try_into().map_err(serde::de::Error::custom)
    }
}

impl HybridZonotope {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("matrices of f64 always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let j: HzJson = serde_json::from_str(text)?;
        j.try_into()
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
