use d3c_core::exact::{
    d3c_exact_step, d3c_exact_step_with, ddt_mixed_loss, grad_a_surrogate, local_poa_line_search, mixed_grads,
    snapshot, strategy_step, surrogate_fd_error, ExactConfig, JointState,
};
use d3c_core::games::{
    jacobian_fd_error, BilinearSimplexGame, ElectionGame, Game, LinearTightnessGame, NashParadoxGame, PdGame,
    TrafficNetwork, UnfairGame,
};
use d3c_core::mixing::{init_mixing, mix_losses, MixingMatrix};
use d3c_core::poa::{local_poa_utilitarian, PoaConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn normal(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn random_interior(rng: &mut ChaCha8Rng, n: usize) -> MixingMatrix {
    let rows = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect()
        })
        .collect();
    MixingMatrix::from_rows(rows).unwrap()
}

fn games() -> Vec<(Box<dyn Game>, &'static str)> {
    vec![
        (Box::new(PdGame::new(2, 1.0)), "pd2"),
        (Box::new(PdGame::new(3, 1.0)), "pd3"),
        (Box::new(PdGame::new(4, 0.7)), "pd4"),
        (Box::new(NashParadoxGame::new(0.5)), "game1"),
        (Box::new(UnfairGame::new()), "game2"),
        (Box::new(TrafficNetwork::figure(true)), "traffic"),
        (Box::new(TrafficNetwork::figure(false)), "traffic-no-shortcut"),
        (Box::new(BilinearSimplexGame::new(0.0, -0.75, -1.0, 0.0)), "bilinear"),
        (Box::new(ElectionGame::default()), "election"),
        (Box::new(LinearTightnessGame::new(2.0)), "linear"),
    ]
}

#[test]
fn game_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (game, name) in games() {
        for _ in 0..50 {
            let mut x = normal(&mut rng, game.dim());
            if name == "game1" {
                x.iter_mut().for_each(|v| *v = rng.random::<f64>());
            }
            let err = jacobian_fd_error(game.as_ref(), &x, 1e-6);
            assert!(err < 1e-5, "{name}: {err}");
        }
    }
}

#[test]
fn pd_dynamics_jacobian_is_twice_identity() {
    let g = PdGame::new(4, 1.3);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = MixingMatrix::identity(4);
    for _ in 0..5 {
        let x = normal(&mut rng, g.dim());
        let base: Vec<f64> = mixed_grads(&g, &x, &a).concat();
        for k in 0..x.len() {
            let mut xp = x.clone();
            xp[k] += 1e-3;
            let moved: Vec<f64> = mixed_grads(&g, &xp, &a).concat();
            for (m, (p, b)) in moved.iter().zip(&base).enumerate() {
                let want = if m == k { 2.0 } else { 0.0 };
                assert!(((p - b) / 1e-3 - want).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn surrogate_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cases: Vec<(Box<dyn Game>, usize)> = vec![
        (Box::new(PdGame::new(2, 1.0)), 20),
        (Box::new(PdGame::new(3, 1.0)), 20),
        (Box::new(NashParadoxGame::new(0.5)), 20),
        (Box::new(UnfairGame::new()), 20),
        (Box::new(TrafficNetwork::figure(true)), 10),
        (Box::new(ElectionGame::default()), 10),
    ];
    for (game, count) in cases {
        let n = game.n_players();
        let mut checked = 0;
        while checked < count {
            let x = normal(&mut rng, game.dim());
            let a = random_interior(&mut rng, n);
            let eps = 0.05;
            for i in 0..n {
                // Stay away from the kink of the ReLU.
                if (ddt_mixed_loss(game.as_ref(), &x, &a, i) + eps).abs() <= 1e-4 {
                    continue;
                }
                let err = surrogate_fd_error(game.as_ref(), &x, &a, i, eps, 1e-6);
                assert!(err < 1e-5, "err {err}");
                checked += 1;
            }
        }
    }
}

#[test]
fn surrogate_zero_when_losses_fall() {
    let g = PdGame::new(3, 1.0);
    let a = MixingMatrix::identity(3);
    // Gradient descent on own losses from a point where all losses fall.
    let x = vec![0.5; 6];
    for i in 0..3 {
        assert!(ddt_mixed_loss(&g, &x, &a, i) < 0.0);
        assert_eq!(grad_a_surrogate(&g, &x, &a, i, 0.0), vec![0.0; 3]);
    }
}

#[test]
fn optimum_with_uniform_mixing_is_fixed_point() {
    let g = PdGame::new(4, 1.0);
    let a = MixingMatrix::uniform(4);
    let x = vec![0.25; g.dim()];
    for i in 0..4 {
        assert!(grad_a_surrogate(&g, &x, &a, i, 0.0).iter().all(|v| v.abs() < 1e-12));
    }
    let state = JointState { params: x.clone(), a: a.clone(), step: 0 };
    let next = d3c_exact_step(&g, &state, &ExactConfig { eta_a: 1.0, epsilon: 0.0, ..Default::default() });
    assert!(next.params.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-12));
    assert_eq!(next.a, a);
}

#[test]
fn improve_stay_keeps_rows_bit_identical() {
    let g = PdGame::new(3, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = ExactConfig { eta_a: 1.0, nu: 0.0, epsilon: 0.0, ..Default::default() };
    let mut seen = 0;
    for _ in 0..200 {
        let x = normal(&mut rng, g.dim());
        let a = init_mixing(3, 0.99).unwrap();
        if (0..3).all(|i| ddt_mixed_loss(&g, &x, &a, i) < 0.0) {
            let next = d3c_exact_step(&g, &JointState { params: x, a: a.clone(), step: 0 }, &cfg);
            assert_eq!(next.a, a);
            seen += 1;
        }
    }
    assert!(seen > 0);
}

#[test]
fn frozen_rows_and_strategies_stay_put() {
    let g = PdGame::new(4, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut x = normal(&mut rng, g.dim());
    x[..3].iter_mut().for_each(|v| *v = 0.0);
    let mut a = init_mixing(4, 0.99).unwrap();
    a.rows[0] = MixingMatrix::identity(4).rows[0].clone();
    let frozen = [true, false, false, false];
    let cfg = ExactConfig { eta_a: 1.0, ..Default::default() };
    let mut s = JointState { params: x, a, step: 0 };
    for _ in 0..50 {
        s = d3c_exact_step_with(&g, &s, &cfg, &frozen);
    }
    assert_eq!(&s.params[..3], &[0.0; 3]);
    assert_eq!(s.a.rows[0].weights, vec![1.0, 0.0, 0.0, 0.0]);
}

#[test]
fn zero_mixing_step_is_gradient_descent() {
    let g = PdGame::new(3, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = normal(&mut rng, g.dim());
    let cfg = ExactConfig { eta_a: 0.0, dt: 0.05, ..Default::default() };
    let mut d3c = JointState { params: x.clone(), a: MixingMatrix::identity(3), step: 0 };
    let mut gd = d3c.clone();
    for _ in 0..300 {
        d3c = d3c_exact_step(&g, &d3c, &cfg);
        gd = JointState { params: strategy_step(&g, &gd, cfg.dt), a: gd.a.clone(), step: gd.step + 1 };
    }
    assert_eq!(d3c.params, gd.params);
    assert!(d3c.params.iter().all(|v| v.abs() < 1e-6));
}

#[test]
fn rates_match_an_euler_step() {
    let g = PdGame::new(3, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let dt = 1e-4;
    for _ in 0..10 {
        let x = normal(&mut rng, g.dim());
        let a = random_interior(&mut rng, 3);
        let state = JointState { params: x.clone(), a: a.clone(), step: 0 };
        let before = mix_losses(&a, &g.losses(&x)).unwrap();
        let after = mix_losses(&a, &g.losses(&strategy_step(&g, &state, dt))).unwrap();
        for i in 0..3 {
            let fd = (after[i] - before[i]) / dt;
            let rate = ddt_mixed_loss(&g, &x, &a, i);
            assert!((fd - rate).abs() < 1e-2 * (1.0 + rate.abs()), "{fd} vs {rate}");
        }
    }
}

struct Bowl {
    layout: Vec<std::ops::Range<usize>>,
}

impl Game for Bowl {
    fn n_players(&self) -> usize {
        1
    }
    fn layout(&self) -> &[std::ops::Range<usize>] {
        &self.layout
    }
    fn losses(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0] * x[0] + 3.0 * x[1] * x[1] + x[0] * x[1]]
    }
    fn loss_jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        vec![vec![2.0 * x[0] + x[1], 6.0 * x[1] + x[0]]]
    }
}

#[test]
fn single_player_rate_is_minus_gradient_norm() {
    let g = Bowl { layout: vec![0..2] };
    let x = vec![0.3, -0.7];
    let a = MixingMatrix::identity(1);
    let grad = &g.loss_jacobian(&x)[0];
    let want = -(grad[0] * grad[0] + grad[1] * grad[1]);
    assert!((ddt_mixed_loss(&g, &x, &a, 0) - want).abs() < 1e-12);
    let pd = PdGame::new(2, 1.0);
    assert!(ddt_mixed_loss(&pd, &[0.5, 0.5], &MixingMatrix::uniform(2), 0).abs() < 1e-12);
}

#[test]
fn tightness_bound_matches_line_search() {
    let g = LinearTightnessGame::new(2.0);
    let x = vec![-1.0, -1.0];
    let a = MixingMatrix::identity(2);
    let dt = 0.01;
    let s = snapshot(&g, &x, &a);
    assert_eq!(s.mixed_losses, vec![1.0, 1.0]);
    assert_eq!(s.loss_rates, vec![1.0, 1.0]);
    let (_, bound) = local_poa_utilitarian(&s, &PoaConfig::new(dt)).unwrap();
    let oracle = local_poa_line_search(&g, &x, &a, dt, 101);
    assert!((bound - 1.01).abs() < 1e-12);
    assert!((bound - oracle).abs() < 1e-8, "{bound} vs {oracle}");
}

#[test]
fn bound_is_one_when_all_losses_fall() {
    let g = PdGame::new(3, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut hit = 0;
    for _ in 0..200 {
        let x: Vec<f64> = normal(&mut rng, g.dim()).iter().map(|v| v * 3.0).collect();
        let a = random_interior(&mut rng, 3);
        let s = snapshot(&g, &x, &a);
        let (rho, max) = local_poa_utilitarian(&s, &PoaConfig::new(0.01)).unwrap();
        assert!(rho.iter().all(|r| *r >= 1.0));
        if s.loss_rates.iter().all(|r| *r <= 0.0) {
            assert_eq!(max, 1.0);
            hit += 1;
        }
    }
    assert!(hit > 0);
}
