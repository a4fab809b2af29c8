//! Multi-agent REINFORCE learners that train on mixed rewards.

use rand_chacha::ChaCha8Rng;

use super::coins::{self, coins_reset, coins_step};
use super::reinforce::{reinforce_update, Episode, LinearSoftmaxPolicy, LinearValue, ReinforceConfig, Transition};
use super::ring::{self, ring_reset, ring_step};
use crate::bandit::{Learner, LearnerFeedback};
use crate::mixing::{mix_rewards, MixingMatrix};

struct Agents {
    policies: Vec<LinearSoftmaxPolicy>,
    values: Vec<LinearValue>,
    cfg: ReinforceConfig,
}

impl Agents {
    fn new(n: usize, actions: usize, features: usize, cfg: ReinforceConfig) -> Self {
        Self {
            policies: vec![LinearSoftmaxPolicy::zeros(actions, features); n],
            values: vec![LinearValue::zeros(features); n],
            cfg,
        }
    }

    fn update(&mut self, episodes: &[Vec<Episode>]) {
        for (i, eps) in episodes.iter().enumerate() {
            let (p, v) = reinforce_update(&self.policies[i], &self.values[i], eps, &self.cfg);
            self.policies[i] = p;
            self.values[i] = v;
        }
    }
}

/// Per-agent episode buffers plus raw and mixed return totals.
struct Batch {
    episodes: Vec<Vec<Episode>>,
    raw: Vec<f64>,
    mixed: Vec<f64>,
}

impl Batch {
    fn new(n: usize) -> Self {
        Self { episodes: vec![Vec::new(); n], raw: vec![0.0; n], mixed: vec![0.0; n] }
    }

    fn feedback(&self, episodes: usize) -> LearnerFeedback {
        let k = episodes as f64;
        LearnerFeedback {
            mixed_returns: self.mixed.iter().map(|v| v / k).collect(),
            raw_returns: self.raw.iter().map(|v| v / k).collect(),
        }
    }
}

/// The two prey of the ring world. One step is a batch of episodes, half
/// starting with prey 0 close to the predator and half with prey 1.
pub struct TrustLearner {
    agents: Agents,
}

impl TrustLearner {
    pub fn new(cfg: ReinforceConfig) -> Self {
        Self { agents: Agents::new(2, ring::ACTIONS, 2, cfg) }
    }

    pub fn policy(&self, i: usize) -> &LinearSoftmaxPolicy {
        &self.agents.policies[i]
    }
}

impl Learner for TrustLearner {
    fn n_agents(&self) -> usize {
        2
    }

    fn step(&mut self, mixing: &MixingMatrix, rng: &mut ChaCha8Rng) -> LearnerFeedback {
        let batch_size = self.agents.cfg.batch;
        let mut batch = Batch::new(2);
        for e in 0..batch_size {
            let side = if e < batch_size / 2 { 0 } else { 1 };
            let mut world = ring_reset(side, rng);
            let mut eps: Vec<Episode> = vec![Vec::new(), Vec::new()];
            while !world.done() {
                let obs = world.observation().to_vec();
                let acts = [0, 1].map(|i| self.agents.policies[i].sample(&obs, rng));
                let (next, r) = ring_step(&world, acts, rng);
                let m = mix_rewards(mixing, &r).expect("two agents");
                for i in 0..2 {
                    eps[i].push(Transition { obs: obs.clone(), action: acts[i], reward: m[i] });
                    batch.raw[i] += r[i];
                    batch.mixed[i] += m[i];
                }
                world = next;
            }
            for (i, ep) in eps.into_iter().enumerate() {
                batch.episodes[i].push(ep);
            }
        }
        self.agents.update(&batch.episodes);
        batch.feedback(batch_size)
    }
}

/// The two agents of the coins gridworld.
pub struct CoinsLearner {
    agents: Agents,
}

impl CoinsLearner {
    pub fn new(cfg: ReinforceConfig) -> Self {
        Self { agents: Agents::new(2, coins::ACTIONS, coins::FEATURES, cfg) }
    }
}

impl Learner for CoinsLearner {
    fn n_agents(&self) -> usize {
        2
    }

    fn step(&mut self, mixing: &MixingMatrix, rng: &mut ChaCha8Rng) -> LearnerFeedback {
        let batch_size = self.agents.cfg.batch;
        let mut batch = Batch::new(2);
        for _ in 0..batch_size {
            let mut world = coins_reset(rng);
            let mut eps: Vec<Episode> = vec![Vec::new(), Vec::new()];
            while !world.done() {
                let obs = [world.observation(0), world.observation(1)];
                let acts = [0, 1].map(|i| self.agents.policies[i].sample(&obs[i], rng));
                let (next, r) = coins_step(&world, acts, rng);
                let m = mix_rewards(mixing, &r).expect("two agents");
                for (i, o) in obs.into_iter().enumerate() {
                    eps[i].push(Transition { obs: o, action: acts[i], reward: m[i] });
                    batch.raw[i] += r[i];
                    batch.mixed[i] += m[i];
                }
                world = next;
            }
            for (i, ep) in eps.into_iter().enumerate() {
                batch.episodes[i].push(ep);
            }
        }
        self.agents.update(&batch.episodes);
        batch.feedback(batch_size)
    }
}
