//! REINFORCE with a linear softmax policy and a linear TD(0) value baseline.

use rand::Rng;

use crate::mixing::softmax;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReinforceConfig {
    pub policy_lr: f64,
    pub batch: usize,
    pub gamma: f64,
    pub value_lr: f64,
}

impl Default for ReinforceConfig {
    fn default() -> Self {
        Self { policy_lr: 0.1, batch: 10, gamma: 1.0, value_lr: 0.1 }
    }
}

/// Logits `W o` with no bias; `weights` is actions x features.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSoftmaxPolicy {
    pub weights: Vec<Vec<f64>>,
}

impl LinearSoftmaxPolicy {
    pub fn zeros(actions: usize, features: usize) -> Self {
        Self { weights: vec![vec![0.0; features]; actions] }
    }

    pub fn probs(&self, obs: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = self.weights.iter().map(|w| w.iter().zip(obs).map(|(a, b)| a * b).sum()).collect();
        softmax(&z)
    }

    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> usize {
        let p = self.probs(obs);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (a, pa) in p.iter().enumerate() {
            acc += pa;
            if u < acc {
                return a;
            }
        }
        p.len() - 1
    }

    /// `d log pi(action | obs) / dW = (e_action - pi) o^T`.
    pub fn log_prob_grad(&self, obs: &[f64], action: usize) -> Vec<Vec<f64>> {
        let p = self.probs(obs);
        p.iter()
            .enumerate()
            .map(|(a, pa)| {
                let c = if a == action { 1.0 - pa } else { -pa };
                obs.iter().map(|o| c * o).collect()
            })
            .collect()
    }

    pub fn entropy(&self, obs: &[f64]) -> f64 {
        -self.probs(obs).iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearValue {
    pub weights: Vec<f64>,
}

impl LinearValue {
    pub fn zeros(features: usize) -> Self {
        Self { weights: vec![0.0; features] }
    }

    pub fn value(&self, obs: &[f64]) -> f64 {
        self.weights.iter().zip(obs).map(|(a, b)| a * b).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: usize,
    pub reward: f64,
}

pub type Episode = Vec<Transition>;

/// Discounted return from every step of an episode.
pub fn returns_to_go(episode: &Episode, gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; episode.len()];
    let mut g = 0.0;
    for (t, tr) in episode.iter().enumerate().rev() {
        g = tr.reward + gamma * g;
        out[t] = g;
    }
    out
}

/// One batch update. The advantage uses the value estimate from before the
/// update; the value function takes a TD(0) step on the same batch.
pub fn reinforce_update(
    policy: &LinearSoftmaxPolicy,
    value: &LinearValue,
    episodes: &[Episode],
    cfg: &ReinforceConfig,
) -> (LinearSoftmaxPolicy, LinearValue) {
    let actions = policy.weights.len();
    let features = value.weights.len();
    let mut gw = vec![vec![0.0; features]; actions];
    let mut gv = vec![0.0; features];
    for ep in episodes {
        let rets = returns_to_go(ep, cfg.gamma);
        for (t, tr) in ep.iter().enumerate() {
            let v = value.value(&tr.obs);
            let adv = rets[t] - v;
            if adv != 0.0 {
                for (row, grow) in gw.iter_mut().zip(policy.log_prob_grad(&tr.obs, tr.action)) {
                    for (g, d) in row.iter_mut().zip(grow) {
                        *g += d * adv;
                    }
                }
            }
            let next = ep.get(t + 1).map_or(0.0, |n| value.value(&n.obs));
            let td = tr.reward + cfg.gamma * next - v;
            for (g, o) in gv.iter_mut().zip(&tr.obs) {
                *g += td * o;
            }
        }
    }
    let scale = 1.0 / episodes.len().max(1) as f64;
    let mut new_policy = policy.clone();
    for (row, grow) in new_policy.weights.iter_mut().zip(&gw) {
        for (w, g) in row.iter_mut().zip(grow) {
            *w += cfg.policy_lr * scale * g;
        }
    }
    let mut new_value = value.clone();
    for (w, g) in new_value.weights.iter_mut().zip(&gv) {
        *w += cfg.value_lr * scale * g;
    }
    (new_policy, new_value)
}
