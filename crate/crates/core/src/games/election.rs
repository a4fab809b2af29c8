use std::ops::Range;

use super::{blocks, Game};
use crate::mixing::MixingMatrix;

/// Four candidates in two parties, `{0, 1}` and `{2, 3}`, one scalar strategy
/// each.
///
/// Inside a party the mates play the two-player convex dilemma
/// `w (x_i^2 + (x_mate - 1)^2)`. Across parties every candidate adds
/// `s_i kappa_z z` with `z = x_0 x_2 + x_1 x_3`, `s = (+1, +1, -1, -1)`, so
/// the cross-party terms cancel in the total.
#[derive(Debug, Clone)]
pub struct ElectionGame {
    pub w_pd: f64,
    pub kappa_z: f64,
    layout: Vec<Range<usize>>,
}

pub const MATE: [usize; 4] = [1, 0, 3, 2];
pub const PARTY_SIGN: [f64; 4] = [1.0, 1.0, -1.0, -1.0];

impl ElectionGame {
    pub fn new(w_pd: f64, kappa_z: f64) -> Self {
        assert!(w_pd > 0.0, "w_pd must be positive");
        Self { w_pd, kappa_z, layout: blocks(4, 1) }
    }

    pub fn party(i: usize) -> usize {
        i / 2
    }

    /// Cross-party part of each loss; sums to zero.
    pub fn inter_party_terms(&self, x: &[f64]) -> [f64; 4] {
        let z = x[0] * x[2] + x[1] * x[3];
        let mut out = [0.0; 4];
        for (i, o) in out.iter_mut().enumerate() {
            *o = PARTY_SIGN[i] * self.kappa_z * z;
        }
        out
    }

    /// Hessian of each loss (constant, the game is quadratic).
    pub fn hessians(&self) -> Vec<Vec<Vec<f64>>> {
        (0..4)
            .map(|j| {
                let mut h = vec![vec![0.0; 4]; 4];
                h[j][j] += 2.0 * self.w_pd;
                h[MATE[j]][MATE[j]] += 2.0 * self.w_pd;
                let s = PARTY_SIGN[j] * self.kappa_z;
                for (a, b) in [(0, 2), (1, 3)] {
                    h[a][b] += s;
                    h[b][a] += s;
                }
                h
            })
            .collect()
    }

    /// Jacobian of the mixed simultaneous-gradient field under `A`.
    pub fn game_jacobian(&self, a: &MixingMatrix) -> Vec<Vec<f64>> {
        crate::poa::mixed_game_jacobian(&self.hessians(), a)
    }
}

impl Default for ElectionGame {
    fn default() -> Self {
        Self::new(1.0, 0.25)
    }
}

impl Game for ElectionGame {
    fn n_players(&self) -> usize {
        4
    }

    fn layout(&self) -> &[Range<usize>] {
        &self.layout
    }

    fn losses(&self, x: &[f64]) -> Vec<f64> {
        let inter = self.inter_party_terms(x);
        (0..4)
            .map(|i| {
                let m = x[MATE[i]] - 1.0;
                self.w_pd * (x[i] * x[i] + m * m) + inter[i]
            })
            .collect()
    }

    fn loss_jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let dz = [x[2], x[3], x[0], x[1]];
        (0..4)
            .map(|i| {
                let mut row: Vec<f64> = dz.iter().map(|d| PARTY_SIGN[i] * self.kappa_z * d).collect();
                row[i] += 2.0 * self.w_pd * x[i];
                row[MATE[i]] += 2.0 * self.w_pd * (x[MATE[i]] - 1.0);
                row
            })
            .collect()
    }
}
