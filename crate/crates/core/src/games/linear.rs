use std::ops::Range;

use super::{blocks, Game};

/// `f_1 = x_1 - kappa x_2`, `f_2 = x_2 - kappa x_1`. The local bound is exact
/// here when `x_1 = x_2`.
#[derive(Debug, Clone)]
pub struct LinearTightnessGame {
    pub kappa: f64,
    layout: Vec<Range<usize>>,
}

impl LinearTightnessGame {
    pub fn new(kappa: f64) -> Self {
        Self { kappa, layout: blocks(2, 1) }
    }
}

impl Game for LinearTightnessGame {
    fn n_players(&self) -> usize {
        2
    }

    fn layout(&self) -> &[Range<usize>] {
        &self.layout
    }

    fn losses(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0] - self.kappa * x[1], x[1] - self.kappa * x[0]]
    }

    fn loss_jacobian(&self, _x: &[f64]) -> Vec<Vec<f64>> {
        vec![vec![1.0, -self.kappa], vec![-self.kappa, 1.0]]
    }
}
