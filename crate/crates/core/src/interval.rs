use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalVector {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl IntervalVector {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::LengthMismatch { expected: lower.len(), found: upper.len() });
        }
        for (&l, &u) in lower.iter().zip(&upper) {
            if !(l.is_finite() && u.is_finite() && l <= u) {
                return Err(Error::InvalidInterval { lower: l, upper: u });
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn point(x: &[f64]) -> Self {
        Self { lower: x.to_vec(), upper: x.to_vec() }
    }

    pub fn zeros(n: usize) -> Self {
        Self { lower: vec![0.0; n], upper: vec![0.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
    }

    /// True when `self ⊆ other` up to `tol`.
    pub fn is_subset_of(&self, other: &Self, tol: f64) -> bool {
        self.dim() == other.dim()
            && (0..self.dim())
                .all(|i| self.lower[i] >= other.lower[i] - tol && self.upper[i] <= other.upper[i] + tol)
    }

    /// Componentwise intersection; `None` if some coordinate is empty.
    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let lower: Vec<f64> = self.lower.iter().zip(&other.lower).map(|(a, b)| a.max(*b)).collect();
        let upper: Vec<f64> = self.upper.iter().zip(&other.upper).map(|(a, b)| a.min(*b)).collect();
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            None
        } else {
            Some(Self { lower, upper })
        }
    }

    /// Interval image of `w·x + v` for `x` in this box.
    pub fn affine_image(&self, w: &DMatrix<f64>, v: &DVector<f64>) -> Self {
        let mut lower = vec![0.0; w.nrows()];
        let mut upper = vec![0.0; w.nrows()];
        self.accumulate_product(w, &mut lower, &mut upper);
        for i in 0..w.nrows() {
            lower[i] += v[i];
            upper[i] += v[i];
        }
        Self { lower, upper }
    }

    /// Adds the interval product `w·self` into `lower`/`upper`.
    pub fn accumulate_product(&self, w: &DMatrix<f64>, lower: &mut [f64], upper: &mut [f64]) {
        for i in 0..w.nrows() {
            for j in 0..w.ncols() {
                let a = w[(i, j)];
                if a >= 0.0 {
                    lower[i] += a * self.lower[j];
                    upper[i] += a * self.upper[j];
                } else {
                    lower[i] += a * self.upper[j];
                    upper[i] += a * self.lower[j];
                }
            }
        }
    }

    pub fn relu(&self) -> Self {
        Self {
            lower: self.lower.iter().map(|v| v.max(0.0)).collect(),
            upper: self.upper.iter().map(|v| v.max(0.0)).collect(),
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inverted() {
        assert!(IntervalVector::new(vec![1.0], vec![0.0]).is_err());
        assert!(IntervalVector::new(vec![0.0], vec![f64::NAN]).is_err());
    }

    #[test]
    fn affine_image_handles_signs() {
        let x = IntervalVector::new(vec![-1.0, 0.0], vec![2.0, 1.0]).unwrap();
        let w = DMatrix::from_row_slice(1, 2, &[2.0, -3.0]);
        let y = x.affine_image(&w, &DVector::from_element(1, 0.5));
        assert_eq!(y.lower, vec![-2.0 - 3.0 + 0.5]);
        assert_eq!(y.upper, vec![4.0 + 0.5]);
    }
}
