use d3c_core::bandit::{run_plain, Learner};
use d3c_core::mixing::{softmax, MixingMatrix};
use d3c_core::poa::{cointegration_coeff, ks_uniform_pvalue, permutation_pvalue};
use d3c_core::rl::coins::{CoinsWorld, SPAWN_P};
use d3c_core::rl::{coins_reset, coins_step, ring_reset, ring_step, ReinforceConfig, RingWorld, TrustLearner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn predator_breaks_ties_evenly() {
    // Predator at 0 with prey two cells away on either side.
    let w = RingWorld { predator: 0, prey: [2, 4], step_idx: 0 };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut counts = [0usize; 2];
    let trials = 10_000;
    for _ in 0..trials {
        let (n, _) = ring_step(&w, [0, 0], &mut rng);
        match n.predator {
            1 => counts[0] += 1,
            5 => counts[1] += 1,
            p => panic!("predator moved to {p}"),
        }
    }
    let e = trials as f64 / 2.0;
    let chi: f64 = counts.iter().map(|c| (*c as f64 - e).powi(2) / e).sum();
    assert!(1.0 - ChiSquared::new(1.0).unwrap().cdf(chi) > 0.01);
}

#[test]
fn coin_spawn_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let steps = 1_000_000;
    let mut spawned = [0usize; 2];
    let mut w = CoinsWorld::empty([0, 24]);
    for _ in 0..steps {
        w.coins = [None; 25];
        let s = w.spawn_coins(&mut rng);
        for k in 0..2 {
            spawned[k] += s[k] as usize;
        }
    }
    let sd = (steps as f64 * SPAWN_P * (1.0 - SPAWN_P)).sqrt();
    for k in 0..2 {
        assert!((spawned[k] as f64 - steps as f64 * SPAWN_P).abs() < 3.0 * sd, "{spawned:?}");
    }
}

#[test]
fn coins_episode_is_deterministic() {
    let play = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = coins_reset(&mut rng);
        let mut total = [0.0; 2];
        let mut coins_seen = 0;
        while !w.done() {
            let a = [rng.random_range(0..5), rng.random_range(0..5)];
            let (n, r) = coins_step(&w, a, &mut rng);
            total[0] += r[0];
            total[1] += r[1];
            coins_seen += n.coins.iter().filter(|c| c.is_some()).count();
            w = n;
        }
        (total, coins_seen, w)
    };
    assert_eq!(play(3), play(3));
}

#[test]
fn ring_episodes_are_deterministic() {
    let play = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = ring_reset(1, &mut rng);
        let mut trace = vec![w];
        while !w.done() {
            let a = [rng.random_range(0..3), rng.random_range(0..3)];
            w = ring_step(&w, a, &mut rng).0;
            trace.push(w);
        }
        trace
    };
    assert_eq!(play(4), play(4));
}

#[test]
fn mixed_rewards_conserve_totals() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut learner = TrustLearner::new(ReinforceConfig::default());
    for _ in 0..20 {
        let rows: Vec<Vec<f64>> =
            (0..2).map(|_| softmax(&[rng.sample(StandardNormal), rng.sample(StandardNormal)])).collect();
        let a = MixingMatrix::from_rows(rows).unwrap();
        let fb = learner.step(&a, &mut rng);
        let raw: f64 = fb.raw_returns.iter().sum();
        let mixed: f64 = fb.mixed_returns.iter().sum();
        assert!((raw - mixed).abs() < 1e-12 * (1.0 + raw.abs()));
    }
    let fb = learner.step(&MixingMatrix::identity(2), &mut rng);
    assert_eq!(fb.raw_returns, fb.mixed_returns);
}

#[test]
fn uniform_mixing_learns_to_cooperate() {
    struct Shared(TrustLearner);
    impl Learner for Shared {
        fn n_agents(&self) -> usize {
            2
        }
        fn step(&mut self, _m: &MixingMatrix, rng: &mut ChaCha8Rng) -> d3c_core::bandit::LearnerFeedback {
            self.0.step(&MixingMatrix::uniform(2), rng)
        }
    }
    let mut learner = Shared(TrustLearner::new(ReinforceConfig::default()));
    let rec = run_plain(&mut learner, 500, 6, 0, 1);
    let late: Vec<f64> = rec
        .rows
        .iter()
        .filter(|r| r.step > 400)
        .map(|r| r.loss_or_return)
        .collect();
    let mean_total = 2.0 * late.iter().sum::<f64>() / late.len() as f64;
    assert!(mean_total > -0.5, "{mean_total}");
}

#[test]
fn white_noise_is_not_cointegrated() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trials = 200;
    let mut small = 0;
    for _ in 0..trials {
        let a: Vec<f64> = (0..1000).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..1000).map(|_| rng.sample(StandardNormal)).collect();
        small += (cointegration_coeff(&a, &b).abs() < 0.1) as usize;
    }
    assert!(small as f64 / trials as f64 > 0.95);
}

#[test]
fn permutation_pvalues_are_uniform_under_null() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut ps = Vec::with_capacity(500);
    for _ in 0..500 {
        let walk = |rng: &mut ChaCha8Rng| {
            let mut x = 0.0;
            (0..60)
                .map(|_| {
                    x += rng.sample::<f64, _>(StandardNormal);
                    x
                })
                .collect::<Vec<f64>>()
        };
        let a = walk(&mut rng);
        let b = walk(&mut rng);
        let p = permutation_pvalue(&a, &b, 999, &mut rng);
        assert!((0.0..=1.0).contains(&p));
        ps.push(p);
    }
    let ks = ks_uniform_pvalue(&ps);
    assert!(ks > 0.01, "KS p = {ks}");
}
