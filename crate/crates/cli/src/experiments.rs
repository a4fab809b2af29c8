//! Maps a config onto a game or environment plus a learning algorithm, runs
//! every seeded run and derives the headline numbers of each experiment.

use std::collections::BTreeMap;

use d3c_core::bandit::{run_bandit, run_fixed, run_plain, Learner, LearnerFeedback};
use d3c_core::exact::{mixed_grads, run_exact, ExactConfig, RunSetup};
use d3c_core::games::{
    gen_braess, BilinearSimplexGame, ElectionGame, Game, NashParadoxGame, PdGame, TrafficNetwork, UnfairGame,
};
use d3c_core::mixing::mix_losses;
use d3c_core::poa::{eigenvalues, relative_attention};
use d3c_core::rl::{ring_optimal_return, CoinsLearner, TrustLearner};
use d3c_core::{MixingMatrix, RecordRow, RunRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::config::{Algo, ConfigError, Experiment, ExperimentConfig};
use crate::runner::{run_seed, run_parallel};

/// Total-loss matrix of the bilinear basin experiment.
pub const BILINEAR_C: [f64; 4] = [0.0, -0.75, -1.0, 0.0];

/// Stream used for generated networks, kept apart from the learning stream.
const NETWORK_STREAM: u64 = 1;
/// Stream used for initial strategies of bandit runs on loss games.
const INIT_STREAM: u64 = 2;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{experiment} does not support algorithm {algo}")]
    Unsupported { experiment: Experiment, algo: Algo },
    #[error(transparent)]
    Core(#[from] d3c_core::D3cError),
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub records: Vec<RunRecord>,
    /// Experiment-specific headline numbers, keyed by name.
    pub extras: BTreeMap<String, f64>,
}

impl ExperimentOutput {
    pub fn extra(&self, key: &str) -> f64 {
        *self.extras.get(key).unwrap_or_else(|| panic!("no extra named {key}"))
    }

    pub fn max_budget_violation(&self) -> f64 {
        self.records.iter().map(|r| r.max_budget_violation).fold(0.0, f64::max)
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    cfg.validate()?;
    let records = match cfg.experiment {
        Experiment::Bilinear => run_bilinear(cfg)?,
        Experiment::Trust | Experiment::Coins => run_rl(cfg)?,
        _ => run_game(cfg)?,
    };
    let extras = summarize(cfg, &records);
    Ok(ExperimentOutput { config: cfg.clone(), records, extras })
}

fn normal_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| scale * Distribution::<f64>::sample(&StandardNormal, rng)).collect()
}

/// Game of one run; Braess networks are drawn from the run's seed.
fn build_game(cfg: &ExperimentConfig, seed: u64) -> (Box<dyn Game>, Option<String>) {
    let g = &cfg.game;
    match cfg.experiment {
        Experiment::Pd => (Box::new(PdGame::new(g.n, g.c)), None),
        Experiment::Traffic => (Box::new(TrafficNetwork::figure(g.shortcut)), None),
        Experiment::BraessBatch => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(NETWORK_STREAM);
            let net = gen_braess(g.delta, &mut rng).with_shortcut(g.shortcut);
            let label = net.record(seed);
            (Box::new(net), Some(label))
        }
        Experiment::Game1 => (Box::new(NashParadoxGame::new(g.kappa)), None),
        Experiment::Game2 => (Box::new(UnfairGame::new()), None),
        Experiment::Election => (Box::new(ElectionGame::new(g.w_pd, g.kappa_z)), None),
        Experiment::Bilinear | Experiment::Trust | Experiment::Coins => unreachable!("not a loss game"),
    }
}

fn frozen_players(cfg: &ExperimentConfig) -> usize {
    if cfg.experiment == Experiment::Pd {
        cfg.game.m
    } else {
        0
    }
}

/// Initial strategy; frozen players start at the origin.
fn init_strategy(cfg: &ExperimentConfig, game: &dyn Game, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x = match cfg.experiment {
        Experiment::Game1 => (0..game.dim()).map(|_| rng.random::<f64>()).collect(),
        _ => normal_vec(rng, game.dim(), cfg.game.init_scale),
    };
    for r in game.layout().iter().take(frozen_players(cfg)) {
        x[r.clone()].iter_mut().for_each(|v| *v = 0.0);
    }
    x
}

fn run_game(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, ExperimentError> {
    let probe = build_game(cfg, cfg.seed).0;
    let n = probe.n_players();
    let mut exact = ExactConfig { steps: cfg.steps, log_every: cfg.log_every, ..cfg.exact };
    let a0 = match cfg.algo {
        Algo::GdBaseline => {
            exact.eta_a = 0.0;
            MixingMatrix::identity(n)
        }
        Algo::Cooperative => {
            exact.eta_a = 0.0;
            MixingMatrix::uniform(n)
        }
        Algo::D3cExact => MixingMatrix::init(n, cfg.a0)?,
        Algo::D3cBandit => {
            cfg.bandit.validate()?;
            MixingMatrix::identity(n)
        }
    };
    let setup = RunSetup::new(a0).with_frozen_prefix(frozen_players(cfg));
    let records = run_parallel(cfg.runs, |run| {
        let seed = run_seed(cfg.seed, run);
        let (game, label) = build_game(cfg, seed);
        let mut record = if cfg.algo == Algo::D3cBandit {
            let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
            init_rng.set_stream(INIT_STREAM);
            let x = init_strategy(cfg, game.as_ref(), &mut init_rng);
            let mut learner = GameLearner::new(game.as_ref(), x, exact.dt, setup.frozen.clone());
            let mut record =
                run_bandit(&mut learner, &cfg.bandit, cfg.steps, seed, run, cfg.log_every).expect("validated");
            record.final_params = learner.params().to_vec();
            record
        } else {
            run_exact(game.as_ref(), &exact, &setup, |rng| init_strategy(cfg, game.as_ref(), rng), seed, run)
        };
        record.label = label;
        record
    });
    Ok(records)
}

/// Gradient players on a loss game, seen through the bandit interface:
/// one step is one strategy step on the mixed losses, returns are negated
/// losses.
pub struct GameLearner<'a> {
    game: &'a dyn Game,
    x: Vec<f64>,
    dt: f64,
    frozen: Vec<bool>,
}

impl<'a> GameLearner<'a> {
    pub fn new(game: &'a dyn Game, mut x: Vec<f64>, dt: f64, frozen: Vec<bool>) -> Self {
        game.project(&mut x);
        Self { game, x, dt, frozen }
    }

    pub fn params(&self) -> &[f64] {
        &self.x
    }
}

impl Learner for GameLearner<'_> {
    fn n_agents(&self) -> usize {
        self.game.n_players()
    }

    fn step(&mut self, mixing: &MixingMatrix, _rng: &mut ChaCha8Rng) -> LearnerFeedback {
        let grads = mixed_grads(self.game, &self.x, mixing);
        for (i, (r, g)) in self.game.layout().iter().zip(grads).enumerate() {
            if self.frozen[i] {
                continue;
            }
            for (k, gk) in r.clone().zip(g) {
                self.x[k] -= self.dt * gk;
            }
        }
        self.game.project(&mut self.x);
        let raw = self.game.losses(&self.x);
        let mixed = mix_losses(mixing, &raw).expect("sizes agree");
        LearnerFeedback {
            mixed_returns: mixed.iter().map(|v| -v).collect(),
            raw_returns: raw.iter().map(|v| -v).collect(),
        }
    }
}

fn run_bilinear(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, ExperimentError> {
    if cfg.algo != Algo::Cooperative {
        return Err(ExperimentError::Unsupported { experiment: cfg.experiment, algo: cfg.algo });
    }
    let [a, b, c, d] = BILINEAR_C;
    let game = BilinearSimplexGame::new(a, b, c, d);
    let uniform = MixingMatrix::uniform(2);
    Ok(run_parallel(cfg.runs, |run| {
        let seed = run_seed(cfg.seed, run);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p0: f64 = rng.random_range(1e-9..1.0);
        let q0: f64 = rng.random_range(1e-9..1.0);
        let (p, q) = game.cooperative_flow(p0, q0, cfg.exact.dt, cfg.steps);
        let mut record = RunRecord::new(run, seed, uniform.clone());
        for (step, (p, q)) in [(0, (p0, q0)), (cfg.steps, (p, q))] {
            let x: Vec<f64> = [BilinearSimplexGame::logits_for(p), BilinearSimplexGame::logits_for(q)].concat();
            let losses = game.losses(&x);
            let mixed = mix_losses(&uniform, &losses).expect("two players");
            record.track_budget(&losses, &mixed);
            for (agent, loss) in losses.iter().enumerate() {
                record.rows.push(RecordRow {
                    run,
                    step,
                    agent,
                    loss_or_return: *loss,
                    rho: 0.0,
                    rho_max: None,
                    ratio_to_optimal: None,
                    attention: 0.0,
                    mixing_row: uniform.rows[agent].weights.clone(),
                });
            }
            record.final_values = losses;
            record.final_params = vec![p, q];
        }
        record
    }))
}

fn run_rl(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, ExperimentError> {
    if cfg.algo == Algo::D3cExact {
        return Err(ExperimentError::Unsupported { experiment: cfg.experiment, algo: cfg.algo });
    }
    if cfg.algo == Algo::D3cBandit {
        cfg.bandit.validate()?;
    }
    Ok(run_parallel(cfg.runs, |run| {
        let seed = run_seed(cfg.seed, run);
        let mut learner: Box<dyn Learner> = match cfg.experiment {
            Experiment::Trust => Box::new(TrustLearner::new(cfg.reinforce)),
            _ => Box::new(CoinsLearner::new(cfg.reinforce)),
        };
        let n = learner.n_agents();
        match cfg.algo {
            Algo::D3cBandit => {
                run_bandit(learner.as_mut(), &cfg.bandit, cfg.steps, seed, run, cfg.log_every).expect("validated")
            }
            Algo::GdBaseline => run_plain(learner.as_mut(), cfg.steps, seed, run, cfg.log_every),
            Algo::Cooperative => {
                run_fixed(learner.as_mut(), &MixingMatrix::uniform(n), cfg.steps, seed, run, cfg.log_every)
            }
            Algo::D3cExact => unreachable!(),
        }
    }))
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len();
    if k == 0 {
        return f64::NAN;
    }
    if k % 2 == 1 {
        s[k / 2]
    } else {
        0.5 * (s[k / 2 - 1] + s[k / 2])
    }
}

/// Population standard deviation.
pub fn std_dev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Element-wise mean of the runs' final mixing matrices.
pub fn mean_mixing(records: &[RunRecord]) -> MixingMatrix {
    let n = records[0].final_mixing.n();
    let mut rows = vec![vec![0.0; n]; n];
    for r in records {
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += r.final_mixing.get(i, j) / records.len() as f64;
            }
        }
    }
    MixingMatrix::from_rows(rows).expect("mean of stochastic rows is stochastic")
}

fn final_ratios(records: &[RunRecord]) -> Vec<f64> {
    records
        .iter()
        .filter_map(|r| r.last_step().and_then(|s| r.rows_at(s).next().and_then(|row| row.ratio_to_optimal)))
        .collect()
}

fn summarize(cfg: &ExperimentConfig, records: &[RunRecord]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    if records.is_empty() {
        return out;
    }
    let totals: Vec<f64> = records.iter().map(RunRecord::final_total).collect();
    out.insert("final_total_mean".into(), mean(&totals));
    out.insert("final_total_median".into(), median(&totals));
    let ratios = final_ratios(records);
    if !ratios.is_empty() {
        out.insert("final_ratio_mean".into(), mean(&ratios));
        out.insert("final_ratio_std".into(), std_dev(&ratios));
    }
    let n = records[0].final_values.len();
    for i in 0..n {
        let v: Vec<f64> = records.iter().map(|r| r.final_values[i]).collect();
        out.insert(format!("final_value_mean_{i}"), mean(&v));
    }
    let max_abs = records
        .iter()
        .flat_map(|r| r.final_params.iter().map(|v| v.abs()))
        .fold(0.0, f64::max);
    match cfg.experiment {
        Experiment::Pd => {
            out.insert("max_abs_param".into(), max_abs);
            let game = PdGame::new(cfg.game.n, cfg.game.c);
            let dim = game.dim();
            let mut worst: f64 = 0.0;
            for k in 0..dim {
                let target = game.target.iter().map(|row| row[k]).sum::<f64>() / game.n as f64;
                let m = mean(&records.iter().map(|r| r.final_params[k]).collect::<Vec<_>>());
                worst = worst.max((m - target).abs());
            }
            out.insert("mean_strategy_error".into(), worst);
            let m = cfg.game.m;
            if m > 0 {
                let coop: Vec<f64> = records.iter().flat_map(|r| r.final_values[m..].to_vec()).collect();
                let defect: Vec<f64> = records.iter().flat_map(|r| r.final_values[..m].to_vec()).collect();
                let (target, _) = d3c_core::games::pd_maverick_values(cfg.game.n, m, cfg.game.c);
                out.insert("cooperator_loss_mean".into(), mean(&coop));
                out.insert("cooperator_loss_max".into(), coop.iter().copied().fold(f64::NEG_INFINITY, f64::max));
                out.insert("defector_loss_min".into(), defect.iter().copied().fold(f64::INFINITY, f64::min));
                out.insert("cooperator_loss_closed_form".into(), target);
            }
        }
        Experiment::Traffic | Experiment::BraessBatch => {
            out.insert("mean_commute".into(), mean(&totals) / n as f64);
        }
        Experiment::Game1 => {
            out.insert("max_abs_param".into(), max_abs);
        }
        Experiment::Game2 => {
            let ratio: Vec<f64> =
                records.iter().map(|r| r.final_mixing.get(0, 0) / r.final_mixing.get(0, 1)).collect();
            out.insert("self_over_other_mean".into(), mean(&ratio));
        }
        Experiment::Election => {
            let a = mean_mixing(records);
            let party = ElectionGame::party;
            let mut within = f64::INFINITY;
            let mut cross = f64::NEG_INFINITY;
            for i in 0..4 {
                for j in 0..4 {
                    if i == j {
                        continue;
                    }
                    if party(i) == party(j) {
                        within = within.min(a.get(i, j));
                    } else {
                        cross = cross.max(a.get(i, j));
                    }
                }
            }
            out.insert("mean_a_within_min".into(), within);
            out.insert("mean_a_cross_max".into(), cross);
            let jac = ElectionGame::new(cfg.game.w_pd, cfg.game.kappa_z).game_jacobian(&a);
            let im = eigenvalues(&jac).iter().map(|(_, im)| im.abs()).fold(0.0, f64::max);
            out.insert("jacobian_max_abs_imag".into(), im);
        }
        Experiment::Bilinear => {
            let hits = records.iter().filter(|r| r.final_params[0] > 0.5 && r.final_params[1] < 0.5).count();
            out.insert("basin_fraction".into(), hits as f64 / records.len() as f64);
        }
        Experiment::Trust => {
            let oracle = ring_optimal_return();
            out.insert("oracle_optimal_total".into(), oracle.optimal_total);
            out.insert("oracle_selfish_total".into(), oracle.selfish_total);
            for i in 0..2 {
                let att: Vec<f64> =
                    records.iter().map(|r| relative_attention(&r.final_mixing, i, 1 - i)).collect();
                out.insert(format!("attention_median_{i}"), median(&att));
            }
        }
        Experiment::Coins => {}
    }
    out
}
