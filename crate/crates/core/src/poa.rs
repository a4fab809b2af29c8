//! Price-of-anarchy estimates, run metrics and a few statistical helpers.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{D3cError, Result};
use crate::games::Game;
use crate::mixing::MixingMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoaConfig {
    pub dt: f64,
    /// Upper bound on the smoothness parameter; `INFINITY` drops the gradient term.
    pub mu_bar: f64,
    pub epsilon: f64,
}

impl PoaConfig {
    pub fn new(dt: f64) -> Self {
        assert!(dt > 0.0, "dt must be positive");
        Self { dt, mu_bar: f64::INFINITY, epsilon: 0.0 }
    }
}

/// Local first-order quantities of every agent at one joint strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSnapshot {
    pub mixed_losses: Vec<f64>,
    /// `d/dt f_i^A` under simultaneous descent.
    pub loss_rates: Vec<f64>,
    /// `||grad_{x_i} f_i^A||^2`.
    pub own_grad_sqnorms: Vec<f64>,
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

fn mu_term(sqnorm: f64, mu_bar: f64, loss: f64) -> f64 {
    if mu_bar.is_infinite() {
        0.0
    } else {
        sqnorm / (mu_bar * loss)
    }
}

/// Per-agent bounds `1 + dt ReLU(rate_i/f_i + ||g_i||^2/(mu f_i))` and their maximum.
pub fn local_poa_utilitarian(s: &LocalSnapshot, cfg: &PoaConfig) -> Result<(Vec<f64>, f64)> {
    let n = s.mixed_losses.len();
    for v in [s.loss_rates.len(), s.own_grad_sqnorms.len()] {
        if v != n {
            return Err(D3cError::DimensionMismatch { expected: n, got: v });
        }
    }
    let mut rho = Vec::with_capacity(n);
    for i in 0..n {
        let f = s.mixed_losses[i];
        if !(f > 0.0) {
            return Err(D3cError::NonPositiveLoss { agent: i, value: f });
        }
        let inner = s.loss_rates[i] / f + mu_term(s.own_grad_sqnorms[i], cfg.mu_bar, f);
        rho.push(1.0 + cfg.dt * relu(inner));
    }
    let max = rho.iter().cloned().fold(1.0, f64::max);
    Ok((rho, max))
}

/// `1 + dt ReLU(rate_max/f_max + sum_i ||g_i||^2/(mu f_max))`.
pub fn local_poa_egalitarian(s: &LocalSnapshot, max_loss_rate: f64, cfg: &PoaConfig) -> Result<f64> {
    let (agent, fmax) = s
        .mixed_losses
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    if !(fmax > 0.0) {
        return Err(D3cError::NonPositiveLoss { agent, value: fmax });
    }
    let sq: f64 = s.own_grad_sqnorms.iter().sum();
    Ok(1.0 + cfg.dt * relu(max_loss_rate / fmax + mu_term(sq, cfg.mu_bar, fmax)))
}

/// Additive surrogate `ReLU(rate + epsilon)`; valid for losses of any sign.
pub fn rho_additive(loss_rate: f64, epsilon: f64) -> f64 {
    relu(loss_rate + epsilon)
}

/// Equilibrium total over optimal total, where both are known in closed form.
pub fn global_poa_closed<G: Game + ?Sized>(game: &G) -> Option<f64> {
    Some(game.nash_total()? / game.opt_total()?)
}

/// Total loss over the optimal total loss.
pub fn ratio_to_optimal(total: f64, opt_total: f64) -> f64 {
    total / opt_total
}

/// Reward version: returns are turned into losses by negation, so the ratio is
/// `attained / optimal` for the negative returns of the ring world. Values
/// above 1 mean worse than optimal.
pub fn ratio_to_optimal_return(attained: f64, optimal: f64) -> f64 {
    (-attained) / (-optimal)
}

/// `ln(A_ii / A_ij)`.
pub fn relative_attention(a: &MixingMatrix, i: usize, j: usize) -> f64 {
    assert!(i != j, "attention needs two distinct agents");
    (a.get(i, i) / a.get(i, j)).ln()
}

/// `ln A_ii` minus the mean of `ln A_ij` over `j != i`.
pub fn mean_relative_attention(a: &MixingMatrix, i: usize) -> f64 {
    let n = a.n();
    let others: f64 = (0..n).filter(|&j| j != i).map(|j| relative_attention(a, i, j)).sum();
    others / (n - 1) as f64
}

/// Jacobian of the mixed gradient field: `J_ik = sum_j A_ji H^j_ik`.
pub fn mixed_game_jacobian(hessians: &[Vec<Vec<f64>>], a: &MixingMatrix) -> Vec<Vec<f64>> {
    let n = a.n();
    let dim = hessians[0].len();
    let mut j = vec![vec![0.0; dim]; n];
    for (i, row) in j.iter_mut().enumerate() {
        for (src, h) in hessians.iter().enumerate() {
            let w = a.get(src, i);
            for (k, v) in row.iter_mut().enumerate() {
                *v += w * h[i][k];
            }
        }
    }
    j
}

/// Eigenvalues `(re, im)` of a square matrix.
pub fn eigenvalues(m: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let n = m.len();
    let mat = nalgebra::DMatrix::from_fn(n, n, |i, k| m[i][k]);
    mat.complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect()
}

/// Weak row diagonal dominance: `|M_ii| >= sum_{k != i} |M_ik|`.
pub fn is_diag_dominant(m: &[Vec<f64>]) -> bool {
    m.iter().enumerate().all(|(i, row)| {
        let off: f64 = row.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, v)| v.abs()).sum();
        row[i].abs() >= off
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub inputs: Vec<bool>,
    pub mixture: bool,
}

impl DominanceReport {
    /// All inputs dominant implies a dominant mixture.
    pub fn consistent(&self) -> bool {
        !self.inputs.iter().all(|d| *d) || self.mixture
    }
}

pub fn check_diag_dominance(hessians: &[Vec<Vec<f64>>], a: &MixingMatrix) -> DominanceReport {
    DominanceReport {
        inputs: hessians.iter().map(|h| is_diag_dominant(h)).collect(),
        mixture: is_diag_dominant(&mixed_game_jacobian(hessians, a)),
    }
}

fn diffs(t: &[f64]) -> Vec<f64> {
    t.windows(2).map(|w| w[1] - w[0]).collect()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Correlation of the first differences of two equal-length series.
pub fn cointegration_coeff(t1: &[f64], t2: &[f64]) -> f64 {
    assert_eq!(t1.len(), t2.len(), "series must have equal length");
    pearson(&diffs(t1), &diffs(t2))
}

/// Two-sided permutation p-value for the differenced correlation, shuffling
/// the differences of `t2`.
pub fn permutation_pvalue<R: Rng + ?Sized>(t1: &[f64], t2: &[f64], resamples: usize, rng: &mut R) -> f64 {
    assert_eq!(t1.len(), t2.len(), "series must have equal length");
    let d1 = diffs(t1);
    let mut d2 = diffs(t2);
    let observed = pearson(&d1, &d2).abs();
    let mut extreme = 0usize;
    for _ in 0..resamples {
        d2.shuffle(rng);
        if pearson(&d1, &d2).abs() >= observed {
            extreme += 1;
        }
    }
    (1 + extreme) as f64 / (1 + resamples) as f64
}

pub fn harmonic_mean_p(pvalues: &[f64]) -> f64 {
    pvalues.len() as f64 / pvalues.iter().map(|p| 1.0 / p).sum::<f64>()
}

/// One-sample Kolmogorov-Smirnov test against U(0, 1), asymptotic p-value
/// with Stephens' small-sample correction.
pub fn ks_uniform_pvalue(samples: &[f64]) -> f64 {
    let mut u = samples.to_vec();
    u.sort_by(|a, b| a.total_cmp(b));
    let n = u.len() as f64;
    let d = u
        .iter()
        .enumerate()
        .map(|(i, v)| ((i + 1) as f64 / n - v).max(v - i as f64 / n))
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)
}

fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
