use std::ops::Range;

use super::{blocks, Game};

/// `f_1 = x_1^2 + 1/(x_2^2 + kappa)`, `f_2 = x_2^2 + 1/(x_1^2 + kappa)` on `[0,1]^2`.
#[derive(Debug, Clone)]
pub struct NashParadoxGame {
    pub kappa: f64,
    layout: Vec<Range<usize>>,
}

impl NashParadoxGame {
    pub fn new(kappa: f64) -> Self {
        assert!((0.0..1.0).contains(&kappa), "kappa must lie in [0, 1)");
        Self { kappa, layout: blocks(2, 1) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Game1ClosedForms {
    pub nash_point: [f64; 2],
    pub nash_loss: f64,
    pub opt_point: [f64; 2],
    pub opt_loss: f64,
    pub poa: f64,
}

pub fn game1_closed_forms(kappa: f64) -> Game1ClosedForms {
    let o = (1.0 - kappa).sqrt();
    let nash_loss = 1.0 / kappa;
    let opt_loss = 2.0 - kappa;
    Game1ClosedForms {
        nash_point: [0.0, 0.0],
        nash_loss,
        opt_point: [o, o],
        opt_loss,
        poa: if kappa == 0.0 { f64::INFINITY } else { nash_loss / opt_loss },
    }
}

impl Game for NashParadoxGame {
    fn n_players(&self) -> usize {
        2
    }

    fn layout(&self) -> &[Range<usize>] {
        &self.layout
    }

    fn losses(&self, x: &[f64]) -> Vec<f64> {
        let k = self.kappa;
        vec![x[0] * x[0] + 1.0 / (x[1] * x[1] + k), x[1] * x[1] + 1.0 / (x[0] * x[0] + k)]
    }

    fn loss_jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let k = self.kappa;
        let d0 = x[0] * x[0] + k;
        let d1 = x[1] * x[1] + k;
        vec![vec![2.0 * x[0], -2.0 * x[1] / (d1 * d1)], vec![-2.0 * x[0] / (d0 * d0), 2.0 * x[1]]]
    }

    fn project(&self, x: &mut [f64]) {
        for v in x {
            *v = v.clamp(0.0, 1.0);
        }
    }

    fn nash_total(&self) -> Option<f64> {
        Some(2.0 / self.kappa)
    }

    fn opt_total(&self) -> Option<f64> {
        Some(2.0 * (2.0 - self.kappa))
    }
}
