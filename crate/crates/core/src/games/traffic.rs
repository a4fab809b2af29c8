use std::ops::Range;

use rand::Rng;

use super::{blocks, Domain, Game};
use crate::error::{D3cError, Result};
use crate::mixing::softmax;

pub const DRIVERS: usize = 4;

/// Four drivers commuting from S to E.
///
/// Routes are SAE, SBE and (with the shortcut) SABE. Edge SA costs `F` per
/// driver on it, BE costs `G` per driver, AE costs `C`, SB costs `D` and the
/// shortcut AB costs `E`. Drivers hold route logits.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficNetwork {
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub shortcut: bool,
    layout: Vec<Range<usize>>,
}

impl TrafficNetwork {
    pub fn new(c: f64, d: f64, e: f64, f: f64, g: f64, shortcut: bool) -> Self {
        let routes = if shortcut { 3 } else { 2 };
        Self { c, d, e, f, g, shortcut, layout: blocks(DRIVERS, routes) }
    }

    /// The network drawn in the Braess figure: `F = G = 10`, `C = D = 45`, `E = 0`.
    pub fn figure(shortcut: bool) -> Self {
        Self::new(45.0, 45.0, 0.0, 10.0, 10.0, shortcut)
    }

    pub fn with_shortcut(&self, shortcut: bool) -> Self {
        Self::new(self.c, self.d, self.e, self.f, self.g, shortcut)
    }

    pub fn routes(&self) -> usize {
        if self.shortcut {
            3
        } else {
            2
        }
    }

    /// Congestion coupling between routes and the constant cost of each route.
    fn model(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let (f, g) = (self.f, self.g);
        let m = vec![vec![f, 0.0, f], vec![0.0, g, g], vec![f, g, f + g]];
        let b = vec![self.c, self.d, self.e];
        let r = self.routes();
        (m[..r].iter().map(|row| row[..r].to_vec()).collect(), b[..r].to_vec())
    }

    /// Expected commute of every driver when each driver picks its route
    /// independently from its own distribution.
    pub fn expected_commutes(&self, probs: &[Vec<f64>]) -> Result<Vec<f64>> {
        let r = self.routes();
        if probs.len() != DRIVERS {
            return Err(D3cError::DimensionMismatch { expected: DRIVERS, got: probs.len() });
        }
        for (i, p) in probs.iter().enumerate() {
            if p.len() != r {
                return Err(D3cError::DimensionMismatch { expected: r, got: p.len() });
            }
            if let Some(v) = p.iter().find(|v| **v < 0.0) {
                return Err(D3cError::NegativeProbability { player: i, value: *v });
            }
        }
        Ok(self.commutes_unchecked(probs))
    }

    fn commutes_unchecked(&self, probs: &[Vec<f64>]) -> Vec<f64> {
        let (m, b) = self.model();
        let r = self.routes();
        let total: Vec<f64> = (0..r).map(|k| probs.iter().map(|p| p[k]).sum()).collect();
        probs
            .iter()
            .map(|p| {
                let mut l = 0.0;
                for a in 0..r {
                    let others: f64 = (0..r).map(|k| m[a][k] * (total[k] - p[k])).sum();
                    l += p[a] * (m[a][a] + others + b[a]);
                }
                l
            })
            .collect()
    }

    /// Commute times of a pure profile, computed from route loads directly.
    pub fn pure_commutes(&self, profile: &[usize]) -> Vec<f64> {
        let mut sa = 0.0;
        let mut be = 0.0;
        for &route in profile {
            if route == 0 || route == 2 {
                sa += 1.0;
            }
            if route == 1 || route == 2 {
                be += 1.0;
            }
        }
        profile
            .iter()
            .map(|&route| match route {
                0 => self.f * sa + self.c,
                1 => self.d + self.g * be,
                _ => self.f * sa + self.e + self.g * be,
            })
            .collect()
    }

    /// All pure route profiles of the four drivers.
    pub fn pure_profiles(&self) -> Vec<[usize; DRIVERS]> {
        let r = self.routes();
        let mut out = Vec::with_capacity(r.pow(DRIVERS as u32));
        for code in 0..r.pow(DRIVERS as u32) {
            let mut p = [0; DRIVERS];
            let mut c = code;
            for slot in p.iter_mut() {
                *slot = c % r;
                c /= r;
            }
            out.push(p);
        }
        out
    }

    /// Shortcut is strictly dominant: `E < min(C - 4G, D - 4F)`.
    pub fn shortcut_dominant(&self) -> bool {
        self.e < (self.c - 4.0 * self.g).min(self.d - 4.0 * self.f)
    }

    /// Best total commute without the shortcut, over splits with 1 to 3
    /// drivers on SAE.
    pub fn split_optimum(&self) -> f64 {
        (1..DRIVERS)
            .map(|k| {
                let (k, rest) = (k as f64, (DRIVERS - k) as f64);
                k * (self.f * k + self.c) + rest * (self.g * rest + self.d)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Total commute when everyone takes the shortcut route.
    pub fn all_shortcut_total(&self) -> f64 {
        let n = DRIVERS as f64;
        n * (n * (self.f + self.g) + self.e)
    }

    pub fn probs(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.layout.iter().map(|r| softmax(&x[r.clone()])).collect()
    }

    /// Text record `C=..,D=..,E=..,F=..,G=..,seed=..`.
    pub fn record(&self, seed: u64) -> String {
        format!("C={},D={},E={},F={},G={},seed={}", self.c, self.d, self.e, self.f, self.g, seed)
    }
}

impl Game for TrafficNetwork {
    fn n_players(&self) -> usize {
        DRIVERS
    }

    fn layout(&self) -> &[Range<usize>] {
        &self.layout
    }

    fn domain(&self) -> Domain {
        Domain::SimplexLogits
    }

    fn losses(&self, x: &[f64]) -> Vec<f64> {
        self.commutes_unchecked(&self.probs(x))
    }

    fn loss_jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let (m, b) = self.model();
        let r = self.routes();
        let p = self.probs(x);
        let total: Vec<f64> = (0..r).map(|k| p.iter().map(|q| q[k]).sum()).collect();
        let mut jac = vec![vec![0.0; DRIVERS * r]; DRIVERS];
        for (j, row) in jac.iter_mut().enumerate() {
            for i in 0..DRIVERS {
                // d l_j / d p_i
                let dp: Vec<f64> = (0..r)
                    .map(|a| {
                        if i == j {
                            m[a][a] + (0..r).map(|k| m[a][k] * (total[k] - p[i][k])).sum::<f64>() + b[a]
                        } else {
                            (0..r).map(|k| m[a][k] * p[j][k]).sum()
                        }
                    })
                    .collect();
                // through the softmax Jacobian diag(p) - p p^T
                let inner: f64 = (0..r).map(|k| p[i][k] * dp[k]).sum();
                for a in 0..r {
                    row[i * r + a] = p[i][a] * (dp[a] - inner);
                }
            }
        }
        jac
    }

    fn nash_total(&self) -> Option<f64> {
        (self.shortcut && self.shortcut_dominant()).then(|| self.all_shortcut_total())
    }

    fn opt_total(&self) -> Option<f64> {
        Some(
            self.pure_profiles()
                .iter()
                .map(|p| self.pure_commutes(p).iter().sum::<f64>())
                .fold(f64::INFINITY, f64::min),
        )
    }
}

/// Rejection-sample a network where the shortcut is strictly dominant and the
/// all-shortcut equilibrium is worse than the best shortcut-free split by more
/// than `delta`.
///
/// `E` is drawn uniformly from the integers strictly between the two bounds,
/// which makes both properties strict.
pub fn gen_braess<R: Rng + ?Sized>(delta: f64, rng: &mut R) -> TrafficNetwork {
    assert!(delta >= 0.0, "delta must be nonnegative");
    loop {
        let f = rng.random_range(1..=20) as f64;
        let g = rng.random_range(1..=20) as f64;
        let c = rng.random_range(4 * g as i64 + 10..=4 * g as i64 + 20) as f64;
        let d = rng.random_range(4 * f as i64 + 10..=4 * f as i64 + 20) as f64;
        let probe = TrafficNetwork::new(c, d, 0.0, f, g, true);
        let x = (probe.split_optimum() + delta) / 4.0 - 4.0 * (f + g);
        let lo = (x.floor() as i64 + 1).max(0);
        let hi = (c - 4.0 * g).min(d - 4.0 * f) as i64 - 1;
        if lo <= hi {
            let e = rng.random_range(lo..=hi) as f64;
            return TrafficNetwork::new(c, d, e, f, g, true);
        }
    }
}
