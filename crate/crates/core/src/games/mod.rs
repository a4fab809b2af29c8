//! Differentiable n-player games.
//!
//! Every game exposes a flat parameter vector split into per-player blocks,
//! the loss vector, and the full loss Jacobian (row `j` is the gradient of
//! `f_j` with respect to every parameter).

use std::ops::Range;

mod bilinear;
mod election;
mod game1;
mod game2;
mod linear;
mod pd;
mod traffic;

pub use bilinear::{bilinear_basin_fraction, BilinearSimplexGame, BASIN_DT, BASIN_STEPS};
pub use election::ElectionGame;
pub use game1::{game1_closed_forms, Game1ClosedForms, NashParadoxGame};
pub use game2::UnfairGame;
pub use linear::LinearTightnessGame;
pub use pd::{pd_build_c, pd_maverick_values, PdGame};
pub use traffic::{gen_braess, TrafficNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Real,
    SimplexLogits,
}

pub trait Game: Send + Sync {
    fn n_players(&self) -> usize;

    /// Parameter range owned by each player.
    fn layout(&self) -> &[Range<usize>];

    fn dim(&self) -> usize {
        self.layout().last().map_or(0, |r| r.end)
    }

    fn domain(&self) -> Domain {
        Domain::Real
    }

    fn losses(&self, x: &[f64]) -> Vec<f64>;

    /// `n_players x dim` matrix of loss gradients.
    fn loss_jacobian(&self, x: &[f64]) -> Vec<Vec<f64>>;

    /// Called after every strategy step; the default leaves `x` as is.
    fn project(&self, _x: &mut [f64]) {}

    fn nash_total(&self) -> Option<f64> {
        None
    }

    fn opt_total(&self) -> Option<f64> {
        None
    }

    /// Each player's gradient of its own loss.
    fn own_grads(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let jac = self.loss_jacobian(x);
        self.layout().iter().enumerate().map(|(i, r)| jac[i][r.clone()].to_vec()).collect()
    }
}

pub(crate) fn blocks(n: usize, size: usize) -> Vec<Range<usize>> {
    (0..n).map(|i| i * size..(i + 1) * size).collect()
}

/// Worst relative error between the analytic Jacobian and central differences.
///
/// The error of each entry is `|a - fd| / max(1, |a|, |fd|)`.
pub fn jacobian_fd_error<G: Game + ?Sized>(game: &G, x: &[f64], h: f64) -> f64 {
    let jac = game.loss_jacobian(x);
    let mut worst: f64 = 0.0;
    let mut xp = x.to_vec();
    for k in 0..x.len() {
        xp[k] = x[k] + h;
        let fp = game.losses(&xp);
        xp[k] = x[k] - h;
        let fm = game.losses(&xp);
        xp[k] = x[k];
        for j in 0..game.n_players() {
            let fd = (fp[j] - fm[j]) / (2.0 * h);
            let scale = 1f64.max(fd.abs()).max(jac[j][k].abs());
            worst = worst.max((jac[j][k] - fd).abs() / scale);
        }
    }
    worst
}
