use std::ops::Range;

use super::{blocks, Game};

/// `f = (x_1^2, x_2^2 - 1.1 x_1^2)`; welfare is unbounded below.
#[derive(Debug, Clone)]
pub struct UnfairGame {
    layout: Vec<Range<usize>>,
}

impl UnfairGame {
    pub const COUPLING: f64 = 1.1;

    pub fn new() -> Self {
        Self { layout: blocks(2, 1) }
    }
}

impl Default for UnfairGame {
    fn default() -> Self {
        Self::new()
    }
}

impl Game for UnfairGame {
    fn n_players(&self) -> usize {
        2
    }

    fn layout(&self) -> &[Range<usize>] {
        &self.layout
    }

    fn losses(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0] * x[0], x[1] * x[1] - Self::COUPLING * x[0] * x[0]]
    }

    fn loss_jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        vec![vec![2.0 * x[0], 0.0], vec![-2.0 * Self::COUPLING * x[0], 2.0 * x[1]]]
    }

    fn nash_total(&self) -> Option<f64> {
        Some(0.0)
    }
}
