//! D3C from scalar returns: each agent holds a perturbed copy of its row for a
//! random number of learning steps and scores the perturbation by the change
//! in its mean return.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{D3cError, Result};
use crate::mixing::{mirror_step, perturb_trial, LogitBounds, MixingMatrix, MixingRow, Perturbation};
use crate::poa::mean_relative_attention;
use crate::record::{RecordRow, RunRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BanditConfig {
    pub eta_a: f64,
    pub delta: f64,
    pub nu: f64,
    pub tau_min: usize,
    pub tau_max: usize,
    pub a0: f64,
    pub epsilon: f64,
    pub bounds: LogitBounds,
}

impl BanditConfig {
    /// Settings for the ring world.
    pub fn trust() -> Self {
        Self {
            eta_a: 1.0,
            delta: 1.0,
            nu: 0.0,
            tau_min: 10,
            tau_max: 20,
            a0: 0.99,
            epsilon: 0.0,
            bounds: LogitBounds { l: -5.0, h: 5.0 },
        }
    }

    /// Settings for the coins gridworld.
    pub fn coins() -> Self {
        Self {
            eta_a: 1e-3,
            delta: 1e-1,
            nu: 1e-6,
            tau_min: 5,
            tau_max: 10,
            a0: 0.99,
            epsilon: 100.0,
            bounds: LogitBounds { l: -5.0, h: 5.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau_min < 1 || self.tau_min > self.tau_max {
            return Err(D3cError::InvalidParameter {
                name: "tau",
                reason: format!("need 1 <= tau_min <= tau_max, got {}..{}", self.tau_min, self.tau_max),
            });
        }
        if !(self.delta > 0.0) {
            return Err(D3cError::InvalidParameter { name: "delta", reason: format!("must be positive, got {}", self.delta) });
        }
        if !(self.eta_a >= 0.0 && self.nu >= 0.0) {
            return Err(D3cError::InvalidParameter { name: "eta_a/nu", reason: "must be nonnegative".into() });
        }
        LogitBounds::new(self.bounds.l, self.bounds.h)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialState {
    pub perturbed_row: MixingRow,
    pub direction: Perturbation,
    pub tau: usize,
    pub t_begin: usize,
    pub g_begin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanditAgentState {
    pub row: MixingRow,
    pub trial: TrialState,
    /// Mean return since the current trial began.
    pub g_mean: f64,
    /// Estimate from the last finished trial.
    pub last_rho: f64,
}

pub fn start_trial<R: Rng + ?Sized>(row: &MixingRow, cfg: &BanditConfig, step: usize, g_mean: f64, rng: &mut R) -> TrialState {
    let (perturbed_row, direction) = perturb_trial(row, cfg.delta, rng);
    let tau = rng.random_range(cfg.tau_min..=cfg.tau_max);
    TrialState { perturbed_row, direction, tau, t_begin: step, g_begin: g_mean }
}

impl BanditAgentState {
    pub fn new<R: Rng + ?Sized>(row: MixingRow, cfg: &BanditConfig, rng: &mut R) -> Self {
        let trial = start_trial(&row, cfg, 0, 0.0, rng);
        Self { row, trial, g_mean: 0.0, last_rho: 0.0 }
    }

    /// Fold return `g` observed at `step` into the running mean of the trial.
    pub fn record_return(&mut self, g: f64, step: usize) {
        let elapsed = step - self.trial.t_begin;
        assert!(elapsed >= 1, "returns are recorded after the trial starts");
        self.g_mean = (self.g_mean * (elapsed - 1) as f64 + g) / elapsed as f64;
    }

    pub fn trial_done(&self, step: usize) -> bool {
        step - self.trial.t_begin == self.trial.tau
    }

    /// Score the trial, update the row and open the next trial. The next
    /// trial's baseline is this trial's mean return.
    pub fn finish_trial<R: Rng + ?Sized>(&mut self, cfg: &BanditConfig, step: usize, rng: &mut R) {
        assert!(self.trial_done(step), "trial finished before its length elapsed");
        let t = &self.trial;
        let rho = ((t.g_begin - self.g_mean) / t.tau as f64 + cfg.epsilon).max(0.0);
        let owner = self.row.owner;
        let mut grad: Vec<f64> = t.direction.direction.iter().map(|d| rho * d).collect();
        grad[owner] -= cfg.nu / self.row.weights[owner];
        self.row = mirror_step(&self.row, &grad, cfg.eta_a, cfg.bounds);
        self.last_rho = rho;
        self.trial = start_trial(&self.row, cfg, step, self.g_mean, rng);
    }
}

/// Per-agent returns of one learning iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerFeedback {
    /// Mean return under the mixed rewards; drives the mixing update.
    pub mixed_returns: Vec<f64>,
    /// Mean return under each agent's own reward; for reporting.
    pub raw_returns: Vec<f64>,
}

/// A multi-agent learner that trains for one iteration on rewards mixed with
/// the given rows.
pub trait Learner {
    fn n_agents(&self) -> usize;
    fn step(&mut self, mixing: &MixingMatrix, rng: &mut ChaCha8Rng) -> LearnerFeedback;
}

fn log_rows(record: &mut RunRecord, run: usize, step: usize, fb: &LearnerFeedback, rho: &[f64], a: &MixingMatrix) {
    for (i, v) in fb.raw_returns.iter().enumerate() {
        record.rows.push(RecordRow {
            run,
            step,
            agent: i,
            loss_or_return: *v,
            rho: rho[i],
            rho_max: None,
            ratio_to_optimal: None,
            attention: mean_relative_attention(a, i),
            mixing_row: a.rows[i].weights.clone(),
        });
    }
}

fn should_log(t: usize, iterations: usize, log_every: usize) -> bool {
    t == 1 || t == iterations || t.is_multiple_of(log_every.max(1))
}

/// Bandit D3C for `iterations` learning steps.
pub fn run_bandit<L: Learner + ?Sized>(
    learner: &mut L,
    cfg: &BanditConfig,
    iterations: usize,
    seed: u64,
    run: usize,
    log_every: usize,
) -> Result<RunRecord> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = learner.n_agents();
    let a0 = MixingMatrix::init(n, cfg.a0)?;
    let mut agents: Vec<BanditAgentState> =
        a0.rows.iter().map(|r| BanditAgentState::new(r.clone(), cfg, &mut rng)).collect();
    let mut record = RunRecord::new(run, seed, a0);
    for t in 1..=iterations {
        let perturbed = MixingMatrix { rows: agents.iter().map(|s| s.trial.perturbed_row.clone()).collect() };
        let fb = learner.step(&perturbed, &mut rng);
        record.track_budget(&fb.raw_returns, &fb.mixed_returns);
        for (i, agent) in agents.iter_mut().enumerate() {
            agent.record_return(fb.mixed_returns[i], t);
            if agent.trial_done(t) {
                agent.finish_trial(cfg, t, &mut rng);
            }
        }
        if should_log(t, iterations, log_every) {
            let a = MixingMatrix { rows: agents.iter().map(|s| s.row.clone()).collect() };
            let rho: Vec<f64> = agents.iter().map(|s| s.last_rho).collect();
            log_rows(&mut record, run, t, &fb, &rho, &a);
        }
        if t == iterations {
            record.final_values = fb.raw_returns;
        }
    }
    record.final_mixing = MixingMatrix { rows: agents.into_iter().map(|s| s.row).collect() };
    Ok(record)
}

/// The same learner on its own rewards only.
pub fn run_plain<L: Learner + ?Sized>(learner: &mut L, iterations: usize, seed: u64, run: usize, log_every: usize) -> RunRecord {
    let eye = MixingMatrix::identity(learner.n_agents());
    run_fixed(learner, &eye, iterations, seed, run, log_every)
}

/// The learner under a mixing matrix that never changes.
pub fn run_fixed<L: Learner + ?Sized>(
    learner: &mut L,
    a: &MixingMatrix,
    iterations: usize,
    seed: u64,
    run: usize,
    log_every: usize,
) -> RunRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut record = RunRecord::new(run, seed, a.clone());
    let zeros = vec![0.0; a.n()];
    for t in 1..=iterations {
        let fb = learner.step(a, &mut rng);
        record.track_budget(&fb.raw_returns, &fb.mixed_returns);
        if should_log(t, iterations, log_every) {
            log_rows(&mut record, run, t, &fb, &zeros, a);
        }
        if t == iterations {
            record.final_values = fb.raw_returns;
        }
    }
    record
}
