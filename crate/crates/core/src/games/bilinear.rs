use std::ops::Range;

use rand::Rng;

use super::{blocks, Domain, Game};
use crate::mixing::softmax;

/// Two players on the 1-simplex with `f_k = x_1^T B_k x_2`, `B_1 + B_2 = C`,
/// `C = [[a, b], [c, d]]`, `x_1 = (p, 1-p)`, `x_2 = (q, 1-q)`.
#[derive(Debug, Clone)]
pub struct BilinearSimplexGame {
    pub b1: [[f64; 2]; 2],
    pub b2: [[f64; 2]; 2],
    layout: Vec<Range<usize>>,
}

impl BilinearSimplexGame {
    /// Even split `B_1 = B_2 = C/2`.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        let half = [[a / 2.0, b / 2.0], [c / 2.0, d / 2.0]];
        Self { b1: half, b2: half, layout: blocks(2, 2) }
    }

    pub fn total_matrix(&self) -> [[f64; 2]; 2] {
        let mut m = [[0.0; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.b1[i][j] + self.b2[i][j];
            }
        }
        m
    }

    /// Total loss at the mixed pair `(p, q)`.
    pub fn total_at(&self, p: f64, q: f64) -> f64 {
        let m = self.total_matrix();
        let x1 = [p, 1.0 - p];
        let x2 = [q, 1.0 - q];
        (0..2).map(|i| (0..2).map(|j| x1[i] * m[i][j] * x2[j]).sum::<f64>()).sum()
    }

    /// Logits that put probability `p` on the first action.
    pub fn logits_for(p: f64) -> [f64; 2] {
        [p.ln(), (1.0 - p).ln()]
    }

    /// Both players descend the total loss from `(p0, q0)`. Returns the final
    /// `(p, q)`.
    pub fn cooperative_flow(&self, p0: f64, q0: f64, dt: f64, steps: usize) -> (f64, f64) {
        let m = self.total_matrix();
        // In logit-difference coordinates u = theta_0 - theta_1, p = sigmoid(u)
        // and gradient descent on both logits moves u by -2 p (1 - p) dF/dp.
        let mut u = (p0 / (1.0 - p0)).ln();
        let mut v = (q0 / (1.0 - q0)).ln();
        let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
        for _ in 0..steps {
            let (p, q) = (sig(u), sig(v));
            let dfdp = q * (m[0][0] - m[1][0]) + (1.0 - q) * (m[0][1] - m[1][1]);
            let dfdq = p * (m[0][0] - m[0][1]) + (1.0 - p) * (m[1][0] - m[1][1]);
            u -= dt * 2.0 * p * (1.0 - p) * dfdp;
            v -= dt * 2.0 * q * (1.0 - q) * dfdq;
        }
        (sig(u), sig(v))
    }
}

/// Share of uniform initial `(p, q)` whose cooperative flow ends at `(1, 0)`.
pub fn bilinear_basin_fraction<R: Rng + ?Sized>(
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    trials: usize,
    rng: &mut R,
) -> f64 {
    let game = BilinearSimplexGame::new(a, b, c, d);
    let mut hits = 0usize;
    for _ in 0..trials {
        let p0: f64 = rng.random_range(1e-9..1.0);
        let q0: f64 = rng.random_range(1e-9..1.0);
        let (p, q) = game.cooperative_flow(p0, q0, BASIN_DT, BASIN_STEPS);
        if p > 0.5 && q < 0.5 {
            hits += 1;
        }
    }
    hits as f64 / trials as f64
}

pub const BASIN_DT: f64 = 0.05;
pub const BASIN_STEPS: usize = 10_000;

fn softmax_vjp(p: &[f64], dp: &[f64]) -> Vec<f64> {
    let inner: f64 = p.iter().zip(dp).map(|(a, b)| a * b).sum();
    p.iter().zip(dp).map(|(a, b)| a * (b - inner)).collect()
}

impl Game for BilinearSimplexGame {
    fn n_players(&self) -> usize {
        2
    }

    fn layout(&self) -> &[Range<usize>] {
        &self.layout
    }

    fn domain(&self) -> Domain {
        Domain::SimplexLogits
    }

    fn losses(&self, x: &[f64]) -> Vec<f64> {
        let x1 = softmax(&x[0..2]);
        let x2 = softmax(&x[2..4]);
        [self.b1, self.b2]
            .iter()
            .map(|b| (0..2).map(|i| (0..2).map(|j| x1[i] * b[i][j] * x2[j]).sum::<f64>()).sum())
            .collect()
    }

    fn loss_jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let x1 = softmax(&x[0..2]);
        let x2 = softmax(&x[2..4]);
        [self.b1, self.b2]
            .iter()
            .map(|b| {
                let d1: Vec<f64> = (0..2).map(|i| (0..2).map(|j| b[i][j] * x2[j]).sum()).collect();
                let d2: Vec<f64> = (0..2).map(|j| (0..2).map(|i| b[i][j] * x1[i]).sum()).collect();
                let mut row = softmax_vjp(&x1, &d1);
                row.extend(softmax_vjp(&x2, &d2));
                row
            })
            .collect()
    }
}
