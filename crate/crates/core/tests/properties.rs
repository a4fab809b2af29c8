use d3c_core::bandit::{run_bandit, start_trial, BanditConfig, Learner, LearnerFeedback};
use d3c_core::games::{ElectionGame, Game};
use d3c_core::mixing::{
    kl_anchor, kl_anchor_grad, mirror_step, mix_losses, sample_sphere, softmax, LogitBounds, MixingMatrix, MixingRow,
};
use d3c_core::poa::{check_diag_dominance, rho_additive};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn stochastic(raw: Vec<Vec<f64>>) -> MixingMatrix {
    let rows = raw
        .into_iter()
        .map(|r| {
            let s: f64 = r.iter().sum();
            r.into_iter().map(|v| v / s).collect()
        })
        .collect();
    MixingMatrix::from_rows(rows).unwrap()
}

fn matrix_and_losses() -> impl Strategy<Value = (MixingMatrix, Vec<f64>)> {
    (2usize..8).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(1e-3f64..1.0, n), n),
            prop::collection::vec(-1e3f64..1e3, n),
        )
            .prop_map(|(raw, f)| (stochastic(raw), f))
    })
}

fn row_and_grad() -> impl Strategy<Value = (MixingRow, Vec<f64>, f64)> {
    (2usize..8).prop_flat_map(|n| {
        (
            prop::collection::vec(-8f64..8.0, n),
            prop::collection::vec(-50f64..50.0, n),
            0usize..n,
            0f64..3.0,
        )
            .prop_map(|(z, g, owner, eta)| (MixingRow::new(owner, softmax(&z)).unwrap(), g, eta))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn budget_balance((a, f) in matrix_and_losses()) {
        let m = mix_losses(&a, &f).unwrap();
        let s: f64 = f.iter().sum();
        prop_assert!((m.iter().sum::<f64>() - s).abs() <= 1e-9 * (1.0 + s.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn mirror_step_stays_on_simplex((row, g, eta) in row_and_grad(), clip in any::<bool>()) {
        let bounds = if clip { LogitBounds::default() } else { LogitBounds::unbounded() };
        let out = mirror_step(&row, &g, eta, bounds);
        prop_assert_eq!(out.owner, row.owner);
        prop_assert!(out.weights.iter().all(|w| *w >= 1e-12));
        prop_assert!((out.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn mirror_step_ignores_constant_shift((row, g, eta) in row_and_grad(), c in -10f64..10.0) {
        let shifted: Vec<f64> = g.iter().map(|v| v + c).collect();
        let a = mirror_step(&row, &g, eta, LogitBounds::unbounded());
        let b = mirror_step(&row, &shifted, eta, LogitBounds::unbounded());
        for (x, y) in a.weights.iter().zip(&b.weights) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn additive_rho_is_convex_and_nonnegative(r1 in -5f64..5.0, r2 in -5f64..5.0, t in 0f64..1.0, eps in 0f64..1.0) {
        let mid = rho_additive(t * r1 + (1.0 - t) * r2, eps);
        prop_assert!(mid >= 0.0);
        prop_assert!(mid <= t * rho_additive(r1, eps) + (1.0 - t) * rho_additive(r2, eps) + 1e-12);
    }
}

#[test]
fn kl_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let n = rng.random_range(2..7);
        let z: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let owner = rng.random_range(0..n);
        let row = MixingRow { owner, weights: softmax(&z) };
        let g = kl_anchor_grad(&row);
        let h = 1e-7;
        for k in 0..n {
            let mut p = row.clone();
            p.weights[k] += h;
            let mut m = row.clone();
            m.weights[k] -= h;
            let fd = (kl_anchor(&p) - kl_anchor(&m)) / (2.0 * h);
            let err = (fd - g[k]).abs() / g[k].abs().max(1.0);
            assert!(err < 1e-6, "{fd} vs {}", g[k]);
        }
    }
}

fn binomial_two_sided_p(successes: usize, n: usize) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let mean = n as f64 / 2.0;
    let sd = (n as f64 / 4.0).sqrt();
    let z = ((successes as f64 - mean).abs()) / sd;
    2.0 * (1.0 - Normal::new(0.0, 1.0).unwrap().cdf(z))
}

#[test]
fn sphere_directions_are_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 4;
    let draws = 100_000;
    let mut sum = vec![0.0; n];
    let mut positive = vec![0usize; n];
    for _ in 0..draws {
        let d = sample_sphere(n, &mut rng);
        assert!((d.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-9);
        for k in 0..n {
            sum[k] += d[k];
            positive[k] += (d[k] > 0.0) as usize;
        }
    }
    // Each coordinate has variance 1/n.
    let se = (1.0 / n as f64 / draws as f64).sqrt();
    for k in 0..n {
        assert!((sum[k] / draws as f64).abs() < 3.0 * se);
        assert!(binomial_two_sided_p(positive[k], draws) > 0.01);
    }
}

#[test]
fn trial_lengths_are_uniform() {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let cfg = BanditConfig::trust();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let row = MixingRow::new(0, vec![0.99, 0.01]).unwrap();
    let k = cfg.tau_max - cfg.tau_min + 1;
    let mut counts = vec![0usize; k];
    let draws = 10_000;
    for _ in 0..draws {
        let t = start_trial(&row, &cfg, 0, 0.0, &mut rng);
        assert!(t.tau >= cfg.tau_min && t.tau <= cfg.tau_max);
        counts[t.tau - cfg.tau_min] += 1;
    }
    let e = draws as f64 / k as f64;
    let chi: f64 = counts.iter().map(|c| (*c as f64 - e).powi(2) / e).sum();
    let p = 1.0 - ChiSquared::new((k - 1) as f64).unwrap().cdf(chi);
    assert!(p > 0.01, "chi-square p = {p}");
}

#[test]
fn one_shot_estimate_points_downhill() {
    // Loss over the row: ||A - w*||^2, seen by the bandit as return -loss.
    let target = [0.2, 0.5, 0.3];
    let loss = |w: &[f64]| w.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let row = MixingRow::new(0, vec![0.7, 0.2, 0.1]).unwrap();
    // True gradient of the loss with respect to the row logits.
    let w = &row.weights;
    let dl: Vec<f64> = w.iter().zip(&target).map(|(a, b)| 2.0 * (a - b)).collect();
    let inner: f64 = w.iter().zip(&dl).map(|(a, b)| a * b).sum();
    let grad_z: Vec<f64> = w.iter().zip(&dl).map(|(a, b)| a * (b - inner)).collect();
    let cfg = BanditConfig { delta: 0.05, tau_min: 1, tau_max: 1, epsilon: 0.0, ..BanditConfig::trust() };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut agree, mut total) = (0usize, 0usize);
    let mut mean = [0.0; 3];
    let g_base = -loss(w);
    for _ in 0..10_000 {
        let t = start_trial(&row, &cfg, 0, g_base, &mut rng);
        let g = -loss(&t.perturbed_row.weights);
        let rho = ((t.g_begin - g) / t.tau as f64 + cfg.epsilon).max(0.0);
        if rho == 0.0 {
            continue;
        }
        let update: Vec<f64> = t.direction.direction.iter().map(|d| -rho * d).collect();
        let dot: f64 = update.iter().zip(&grad_z).map(|(u, g)| -u * g).sum();
        total += 1;
        agree += (dot > 0.0) as usize;
        for k in 0..3 {
            mean[k] += update[k];
        }
    }
    let dot: f64 = mean.iter().zip(&grad_z).map(|(u, g)| -u * g).sum();
    assert!(dot > 0.0);
    assert!(agree > total / 2 && binomial_two_sided_p(agree, total) < 0.01);
}

struct Improving {
    t: f64,
}

impl Learner for Improving {
    fn n_agents(&self) -> usize {
        3
    }
    fn step(&mut self, mixing: &MixingMatrix, _rng: &mut ChaCha8Rng) -> LearnerFeedback {
        self.t += 1.0;
        let raw = vec![self.t, 2.0 * self.t, 0.5 * self.t];
        let mixed = mix_losses(mixing, &raw).unwrap();
        LearnerFeedback { mixed_returns: mixed, raw_returns: raw }
    }
}

#[test]
fn improving_returns_leave_mixing_alone() {
    let cfg = BanditConfig { nu: 0.0, epsilon: 0.0, ..BanditConfig::trust() };
    let rec = run_bandit(&mut Improving { t: 0.0 }, &cfg, 500, 7, 0, 50).unwrap();
    assert_eq!(rec.final_mixing, MixingMatrix::init(3, 0.99).unwrap());
    assert!(rec.max_budget_violation < 1e-12);
    let cfg = BanditConfig { nu: 0.01, epsilon: 0.0, bounds: LogitBounds::unbounded(), ..BanditConfig::trust() };
    let rec = run_bandit(&mut Improving { t: 0.0 }, &cfg, 500, 7, 0, 50).unwrap();
    for i in 0..3 {
        assert!(rec.final_mixing.get(i, i) > 0.99);
    }
}

#[test]
fn bandit_runs_are_reproducible() {
    let cfg = BanditConfig::trust();
    let a = run_bandit(&mut Improving { t: 0.0 }, &cfg, 100, 9, 0, 10).unwrap();
    let b = run_bandit(&mut Improving { t: 0.0 }, &cfg, 100, 9, 0, 10).unwrap();
    assert_eq!(a, b);
}

#[test]
fn election_cross_terms_cancel() {
    let g = ElectionGame::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
        let t = g.inter_party_terms(&x);
        assert!(t.iter().sum::<f64>().abs() < 1e-12);
        let f = g.losses(&x);
        let own: f64 = (0..4).map(|i| f[i] - t[i]).sum();
        assert!((f.iter().sum::<f64>() - own).abs() < 1e-12);
    }
}

#[test]
fn dominant_hessians_give_dominant_mixture() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let n = rng.random_range(2..6);
        let hs: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|_| {
                let mut h: Vec<Vec<f64>> =
                    (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
                for i in 0..n {
                    let off: f64 = (0..n).filter(|k| *k != i).map(|k| h[i][k].abs()).sum();
                    h[i][i] = off + rng.random::<f64>();
                }
                h
            })
            .collect();
        let raw: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random::<f64>() + 0.01).collect()).collect();
        let r = check_diag_dominance(&hs, &stochastic(raw));
        assert!(r.inputs.iter().all(|d| *d));
        assert!(r.mixture);
    }
}
