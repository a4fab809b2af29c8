//! Mixing rows on the simplex and the updates that act on them.
//!
//! Row `i` of a [`MixingMatrix`] belongs to agent `i`. Agent `i` minimizes the
//! mixed loss `f_i^A = sum_j A_ji f_j`, so column `i` decides what agent `i`
//! optimizes while row `i` decides how agent `i`'s own loss is shared out.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{D3cError, Result};

/// Weights are never allowed below this value before a log is taken.
pub const WEIGHT_FLOOR: f64 = 1e-12;

const SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MixingRow {
    pub owner: usize,
    pub weights: Vec<f64>,
}

impl MixingRow {
    pub fn new(owner: usize, weights: Vec<f64>) -> Result<Self> {
        if owner >= weights.len() {
            return Err(D3cError::DimensionMismatch { expected: owner + 1, got: weights.len() });
        }
        let sum: f64 = weights.iter().sum();
        let min = weights.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min >= 0.0) || (sum - 1.0).abs() > SUM_TOL {
            return Err(D3cError::NotStochastic { row: owner, sum, min });
        }
        Ok(Self { owner, weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn self_weight(&self) -> f64 {
        self.weights[self.owner]
    }

    /// Log-weights with the interior floor applied.
    pub fn logits(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.max(WEIGHT_FLOOR).ln()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    pub rows: Vec<MixingRow>,
}

impl MixingMatrix {
    /// `A_ii = a0`, off-diagonals `(1 - a0)/(n - 1)`.
    pub fn init(n: usize, a0: f64) -> Result<Self> {
        if n < 2 {
            return Err(D3cError::TooFewPlayers(n));
        }
        let lower = 1.0 / n as f64;
        if !(a0 > lower && a0 < 1.0) {
            return Err(D3cError::InvalidSelfWeight { a0, lower });
        }
        let off = (1.0 - a0) / (n - 1) as f64;
        let rows = (0..n)
            .map(|i| {
                let weights = (0..n).map(|j| if i == j { a0 } else { off }).collect();
                MixingRow { owner: i, weights }
            })
            .collect();
        Ok(Self { rows })
    }

    /// Exact identity rows: every agent keeps its own loss. This is the
    /// `a0 -> 1` limit and turns D3C into plain simultaneous gradient descent.
    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| MixingRow { owner: i, weights: (0..n).map(|j| (i == j) as u8 as f64).collect() })
            .collect();
        Self { rows }
    }

    pub fn uniform(n: usize) -> Self {
        let rows = (0..n).map(|i| MixingRow { owner: i, weights: vec![1.0 / n as f64; n] }).collect();
        Self { rows }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, w)| {
                if w.len() != n {
                    return Err(D3cError::DimensionMismatch { expected: n, got: w.len() });
                }
                MixingRow::new(i, w)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].weights[j]
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.weights.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogitBounds {
    pub l: f64,
    pub h: f64,
}

impl LogitBounds {
    pub fn new(l: f64, h: f64) -> Result<Self> {
        if !(l < h) {
            return Err(D3cError::InvalidBounds { l, h });
        }
        Ok(Self { l, h })
    }

    pub fn unbounded() -> Self {
        Self { l: f64::NEG_INFINITY, h: f64::INFINITY }
    }
}

impl Default for LogitBounds {
    fn default() -> Self {
        Self { l: -5.0, h: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub direction: Vec<f64>,
    pub scale: f64,
}

pub fn init_mixing(n: usize, a0: f64) -> Result<MixingMatrix> {
    MixingMatrix::init(n, a0)
}

/// `out_i = sum_j A_ji f_j`.
pub fn mix_losses(a: &MixingMatrix, f: &[f64]) -> Result<Vec<f64>> {
    let n = a.n();
    if f.len() != n {
        return Err(D3cError::DimensionMismatch { expected: n, got: f.len() });
    }
    let mut out = vec![0.0; n];
    for (j, row) in a.rows.iter().enumerate() {
        for (i, w) in row.weights.iter().enumerate() {
            out[i] += w * f[j];
        }
    }
    Ok(out)
}

/// Same transform as [`mix_losses`], applied to rewards.
pub fn mix_rewards(a: &MixingMatrix, r: &[f64]) -> Result<Vec<f64>> {
    mix_losses(a, r)
}

/// `KL(e_i || A_i) = -ln A_ii`.
pub fn kl_anchor(row: &MixingRow) -> f64 {
    -row.self_weight().max(WEIGHT_FLOOR).ln()
}

pub fn kl_anchor_grad(row: &MixingRow) -> Vec<f64> {
    let mut g = vec![0.0; row.len()];
    g[row.owner] = -1.0 / row.self_weight().max(WEIGHT_FLOOR);
    g
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn row_from_logits(owner: usize, logits: &[f64]) -> MixingRow {
    let weights = softmax(logits).into_iter().map(|w| w.max(WEIGHT_FLOOR)).collect();
    MixingRow { owner, weights }
}

/// `softmax(clip(log w - eta * grad, l, h))`.
///
/// A zero step returns the row untouched, so a row that receives no gradient
/// stays bit-identical.
pub fn mirror_step(row: &MixingRow, grad: &[f64], eta: f64, bounds: LogitBounds) -> MixingRow {
    assert_eq!(grad.len(), row.len(), "gradient length must match row length");
    assert!(eta >= 0.0, "step size must be nonnegative");
    if grad.iter().all(|g| eta * g == 0.0) {
        return row.clone();
    }
    let logits: Vec<f64> = row
        .logits()
        .iter()
        .zip(grad)
        .map(|(z, g)| (z - eta * g).clamp(bounds.l, bounds.h))
        .collect();
    row_from_logits(row.owner, &logits)
}

/// Uniform direction on the unit sphere in `R^n`.
pub fn sample_sphere<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Row pushed along a fixed direction in logit space.
pub fn perturb_row(row: &MixingRow, direction: &[f64], delta: f64) -> MixingRow {
    if delta == 0.0 {
        return row.clone();
    }
    let logits: Vec<f64> = row.logits().iter().zip(direction).map(|(z, d)| z + delta * d).collect();
    row_from_logits(row.owner, &logits)
}

pub fn perturb_trial<R: Rng + ?Sized>(row: &MixingRow, delta: f64, rng: &mut R) -> (MixingRow, Perturbation) {
    assert!(delta >= 0.0, "perturbation scale must be nonnegative");
    let direction = sample_sphere(row.len(), rng);
    let perturbed = perturb_row(row, &direction, delta);
    (perturbed, Perturbation { direction, scale: delta })
}
