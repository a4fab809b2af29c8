use std::ops::Range;

use super::{blocks, Game};

/// Target matrix of the n-player prisoner's dilemma: a reversed circulant of
/// `([0]*(n-1) + [c]) * (n-1)` (itself reversed), keeping the first `n` rows.
pub fn pd_build_c(n: usize, c: f64) -> Vec<Vec<f64>> {
    assert!(n >= 2, "need at least 2 players");
    let len = n * (n - 1);
    let mut base = Vec::with_capacity(len);
    for _ in 0..n - 1 {
        base.extend(std::iter::repeat_n(0.0, n - 1));
        base.push(c);
    }
    base.reverse();
    // circulant(base)[i][k] = base[(i - k) mod len]; reversing columns maps k -> len-1-k.
    (0..n).map(|i| (0..len).map(|j| base[(i + j + 1) % len]).collect()).collect()
}

/// `(cooperator loss, all-defect loss)` when `m` players are frozen at the origin.
pub fn pd_maverick_values(n: usize, m: usize, c: f64) -> (f64, f64) {
    let (nf, mf) = (n as f64, m as f64);
    let coop = c * c * (mf + (nf - mf - 1.0).powi(2) / (nf - mf));
    (coop, (nf - 1.0) * c * c)
}

/// `f_i = sum_k (x_k - C_ik)^2` over the shared strategy vector `x` of length
/// `n(n-1)`; player `i` owns the `i`-th block of `n - 1` entries.
#[derive(Debug, Clone)]
pub struct PdGame {
    pub n: usize,
    pub c: f64,
    pub target: Vec<Vec<f64>>,
    layout: Vec<Range<usize>>,
}

impl PdGame {
    pub fn new(n: usize, c: f64) -> Self {
        assert!(c > 0.0, "c must be positive");
        Self { n, c, target: pd_build_c(n, c), layout: blocks(n, n - 1) }
    }
}

impl Game for PdGame {
    fn n_players(&self) -> usize {
        self.n
    }

    fn layout(&self) -> &[Range<usize>] {
        &self.layout
    }

    fn losses(&self, x: &[f64]) -> Vec<f64> {
        self.target.iter().map(|row| row.iter().zip(x).map(|(c, v)| (v - c) * (v - c)).sum()).collect()
    }

    fn loss_jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.target.iter().map(|row| row.iter().zip(x).map(|(c, v)| 2.0 * (v - c)).collect()).collect()
    }

    fn nash_total(&self) -> Option<f64> {
        let n = self.n as f64;
        Some(n * (n - 1.0) * self.c * self.c)
    }

    fn opt_total(&self) -> Option<f64> {
        let n = self.n as f64;
        Some((n - 1.0).powi(2) * self.c * self.c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_small() {
        assert_eq!(pd_build_c(2, 1.0), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let c = pd_build_c(3, 2.0);
        assert_eq!(c[0], vec![0.0, 0.0, 2.0, 0.0, 0.0, 2.0]);
        assert_eq!(c[1], vec![0.0, 2.0, 0.0, 0.0, 2.0, 0.0]);
        assert_eq!(c[2], vec![2.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        for n in 2..12 {
            for row in pd_build_c(n, 1.5) {
                assert_eq!(row.iter().filter(|v| **v == 1.5).count(), n - 1);
                assert_eq!(row.iter().filter(|v| **v == 0.0).count(), (n - 1) * (n - 1));
            }
        }
    }

    #[test]
    fn closed_forms() {
        let g = PdGame::new(10, 1.0);
        let f = g.losses(&vec![0.0; 90]);
        assert!(f.iter().all(|v| (*v - 9.0).abs() < 1e-12));
        let f = g.losses(&vec![0.1; 90]);
        assert!((f.iter().sum::<f64>() - 81.0).abs() < 1e-9);
        assert!((g.nash_total().unwrap() / g.opt_total().unwrap() - 10.0 / 9.0).abs() < 1e-15);
        let g = PdGame::new(4, 2.0);
        let f = g.losses(&vec![0.5; 12]);
        assert!((f.iter().sum::<f64>() - 9.0 * 4.0).abs() < 1e-9);
    }

    #[test]
    fn maverick() {
        let (coop, def) = pd_maverick_values(3, 1, 1.0);
        assert!((coop - 1.5).abs() < 1e-15 && def == 2.0);
        let (coop, _) = pd_maverick_values(10, 0, 1.0);
        assert!((coop - 8.1).abs() < 1e-12);
        for m in 1..8 {
            let (coop, def) = pd_maverick_values(10, m, 1.0);
            let gap = (10 - m - 1) as f64 / (10 - m) as f64;
            assert!((def - coop - gap).abs() < 1e-12);
        }
    }
}
