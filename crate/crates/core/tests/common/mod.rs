#![allow(dead_code)]

use hzreach::model::{ClosedLoopRnn, RnnLayer};
use hzreach::HybridZonotope;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * gauss(r))
}

pub fn normal_vector(r: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| scale * gauss(r))
}

/// A random hybrid zonotope that is nonempty by construction: the right-hand
/// side is generated from a random feasible factor point.
pub fn random_hz(r: &mut ChaCha8Rng, n: usize, ng: usize, nb: usize, nc: usize) -> HybridZonotope {
    let gc = normal_matrix(r, n, ng, 1.0);
    let gb = normal_matrix(r, n, nb, 0.5);
    let c = normal_vector(r, n, 0.5);
    let ac = normal_matrix(r, nc, ng, 1.0);
    let ab = normal_matrix(r, nc, nb, 1.0);
    let xi_c = DVector::from_fn(ng, |_, _| r.random_range(-0.8..0.8));
    let xi_b = DVector::from_fn(nb, |_, _| if r.random::<bool>() { 1.0 } else { -1.0 });
    let b = &ac * xi_c + &ab * xi_b;
    HybridZonotope::new(gc, gb, c, ac, ab, b).unwrap()
}

/// Random HZ with sizes drawn from small ranges.
pub fn random_small_hz(r: &mut ChaCha8Rng, n: usize) -> HybridZonotope {
    let ng = r.random_range(n..=n + 3);
    let nb = r.random_range(0..=3);
    let nc = r.random_range(0..=2.min(ng + nb));
    random_hz(r, n, ng, nb, nc)
}

/// Random closed-loop RNN. Weights are scaled by `gain / sqrt(fan_in)`.
pub fn random_rnn(r: &mut ChaCha8Rng, n: usize, widths: &[usize], gain: f64) -> ClosedLoopRnn {
    let mut prev = n;
    let mut layers = Vec::new();
    for &w in widths {
        let sx = gain / (prev as f64).sqrt();
        let sh = 0.5 * gain / (w as f64).sqrt();
        layers.push(RnnLayer {
            wh: normal_matrix(r, w, w, sh),
            wx: normal_matrix(r, w, prev, sx),
            vh: normal_vector(r, w, 0.3),
        });
        prev = w;
    }
    let wy = normal_matrix(r, n, prev, gain / (prev as f64).sqrt());
    let vy = normal_vector(r, n, 0.3);
    ClosedLoopRnn::new(layers, wy, vy).unwrap()
}

pub fn unit_box(n: usize) -> HybridZonotope {
    HybridZonotope::from_box(&vec![-1.0; n], &vec![1.0; n]).unwrap()
}

pub fn boxed(lower: &[f64], upper: &[f64]) -> HybridZonotope {
    HybridZonotope::from_box(lower, upper).unwrap()
}

/// Regular grid with `k` points per axis over `[lower, upper]`.
pub fn grid(lower: &[f64], upper: &[f64], k: usize) -> Vec<Vec<f64>> {
    let n = lower.len();
    let mut out = vec![vec![]];
    for d in 0..n {
        let mut next = Vec::with_capacity(out.len() * k);
        for p in &out {
            for s in 0..k {
                let v = if k == 1 { lower[d] } else { lower[d] + (upper[d] - lower[d]) * s as f64 / (k - 1) as f64 };
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Unit directions spread deterministically in `R^n`.
pub fn directions(r: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|_| {
            let v: Vec<f64> = (0..n).map(|_| gauss(r)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            v.iter().map(|x| x / norm).collect()
        })
        .collect()
}

/// The half system `x_{t+1} = max(0, 0.5 x_t)` as a one-layer network.
pub fn half_system() -> ClosedLoopRnn {
    ClosedLoopRnn::new(
        vec![RnnLayer { wh: DMatrix::zeros(1, 1), wx: DMatrix::from_element(1, 1, 1.0), vh: DVector::zeros(1) }],
        DMatrix::from_element(1, 1, 0.5),
        DVector::zeros(1),
    )
    .unwrap()
}

/// Identity on nonnegative states: one layer, `Wx = I`, `Wy = I`.
pub fn identity_system(n: usize) -> ClosedLoopRnn {
    ClosedLoopRnn::new(
        vec![RnnLayer { wh: DMatrix::zeros(n, n), wx: DMatrix::identity(n, n), vh: DVector::zeros(n) }],
        DMatrix::identity(n, n),
        DVector::zeros(n),
    )
    .unwrap()
}

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join(name)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn gauss(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}
