//! Gradient-feedback learning: simultaneous gradient descent and exact D3C.
//!
//! Agent `i` descends `f_i^A = sum_j A_ji f_j` on its own block and moves its
//! row `A_i` against the gradient of `ReLU(d/dt f_i^A + epsilon)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::games::Game;
use crate::mixing::{kl_anchor_grad, mirror_step, mix_losses, LogitBounds, MixingMatrix};
use crate::poa::{local_poa_utilitarian, mean_relative_attention, rho_additive, LocalSnapshot, PoaConfig};
use crate::record::{RecordRow, RunRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactConfig {
    pub dt: f64,
    pub eta_a: f64,
    pub nu: f64,
    pub epsilon: f64,
    pub steps: usize,
    pub bounds: LogitBounds,
    /// Log every this many steps; the first and last step are always logged.
    pub log_every: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            eta_a: 0.1,
            nu: 0.0,
            epsilon: 0.01,
            steps: 4000,
            bounds: LogitBounds::unbounded(),
            log_every: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub params: Vec<f64>,
    pub a: MixingMatrix,
    pub step: usize,
}

/// First-order quantities shared by the strategy and mixing updates.
struct Flow {
    jac: Vec<Vec<f64>>,
    /// Flat mixed gradients, zero on frozen blocks.
    g: Vec<f64>,
    /// `d f_j / dt` along `xdot = -g`.
    raw_rates: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Flow {
    fn new<G: Game + ?Sized>(game: &G, x: &[f64], a: &MixingMatrix, frozen: &[bool]) -> Self {
        let jac = game.loss_jacobian(x);
        let n = game.n_players();
        let mut g = vec![0.0; x.len()];
        for (i, r) in game.layout().iter().enumerate() {
            if frozen.get(i).copied().unwrap_or(false) {
                continue;
            }
            for j in 0..n {
                let w = a.get(j, i);
                if w == 0.0 {
                    continue;
                }
                for k in r.clone() {
                    g[k] += w * jac[j][k];
                }
            }
        }
        let raw_rates = jac.iter().map(|row| -dot(row, &g)).collect();
        Self { jac, g, raw_rates }
    }

    fn mixed_rate(&self, a: &MixingMatrix, i: usize) -> f64 {
        (0..a.n()).map(|j| a.get(j, i) * self.raw_rates[j]).sum()
    }

    /// `grad f_i^A` over every parameter.
    fn mixed_loss_grad(&self, a: &MixingMatrix, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.g.len()];
        for (j, row) in self.jac.iter().enumerate() {
            let w = a.get(j, i);
            if w == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(row) {
                *o += w * v;
            }
        }
        out
    }

    fn surrogate_grad<G: Game + ?Sized>(
        &self,
        game: &G,
        a: &MixingMatrix,
        i: usize,
        epsilon: f64,
        frozen: &[bool],
    ) -> Vec<f64> {
        let n = a.n();
        let mut grad = vec![0.0; n];
        if self.mixed_rate(a, i) + epsilon <= 0.0 {
            return grad;
        }
        let fi_a = self.mixed_loss_grad(a, i);
        for (m, r) in game.layout().iter().enumerate() {
            if frozen.get(m).copied().unwrap_or(false) {
                continue;
            }
            grad[m] = -dot(&fi_a[r.clone()], &self.jac[i][r.clone()]);
        }
        grad[i] += self.raw_rates[i];
        grad
    }
}

/// `grad_{x_i} f_i^A = sum_j A_ji grad_{x_i} f_j` for every player.
pub fn mixed_grads<G: Game + ?Sized>(game: &G, params: &[f64], a: &MixingMatrix) -> Vec<Vec<f64>> {
    let flow = Flow::new(game, params, a, &[]);
    game.layout().iter().map(|r| flow.g[r.clone()].to_vec()).collect()
}

/// One simultaneous Euler step `x_i <- x_i - dt grad_{x_i} f_i^A`.
pub fn strategy_step<G: Game + ?Sized>(game: &G, state: &JointState, dt: f64) -> Vec<f64> {
    let flow = Flow::new(game, &state.params, &state.a, &[]);
    let mut x: Vec<f64> = state.params.iter().zip(&flow.g).map(|(p, g)| p - dt * g).collect();
    game.project(&mut x);
    x
}

/// `d/dt f_i^A` along the simultaneous descent flow.
pub fn ddt_mixed_loss<G: Game + ?Sized>(game: &G, params: &[f64], a: &MixingMatrix, i: usize) -> f64 {
    Flow::new(game, params, a, &[]).mixed_rate(a, i)
}

/// Gradient of `ReLU(d/dt f_i^A + epsilon)` with respect to row `A_i`.
///
/// Component `m` is `[m = i] df_i/dt - <grad_{x_m} f_i^A, grad_{x_m} f_i>`:
/// `A_ii` enters through agent `i`'s own mixed loss and every `A_im` enters
/// through agent `m`'s descent direction. Zero on the inactive side of the ReLU.
pub fn grad_a_surrogate<G: Game + ?Sized>(
    game: &G,
    params: &[f64],
    a: &MixingMatrix,
    i: usize,
    epsilon: f64,
) -> Vec<f64> {
    Flow::new(game, params, a, &[]).surrogate_grad(game, a, i, epsilon, &[])
}

pub fn snapshot<G: Game + ?Sized>(game: &G, params: &[f64], a: &MixingMatrix) -> LocalSnapshot {
    let flow = Flow::new(game, params, a, &[]);
    snapshot_from(game, params, a, &flow)
}

fn snapshot_from<G: Game + ?Sized>(game: &G, params: &[f64], a: &MixingMatrix, flow: &Flow) -> LocalSnapshot {
    let f = game.losses(params);
    let mixed_losses = mix_losses(a, &f).expect("game and mixing sizes agree");
    let loss_rates = (0..a.n()).map(|i| flow.mixed_rate(a, i)).collect();
    let own_grad_sqnorms = game.layout().iter().map(|r| flow.g[r.clone()].iter().map(|v| v * v).sum()).collect();
    LocalSnapshot { mixed_losses, loss_rates, own_grad_sqnorms }
}

/// One joint update of strategies and mixing rows, both from the pre-step state.
pub fn d3c_exact_step<G: Game + ?Sized>(game: &G, state: &JointState, cfg: &ExactConfig) -> JointState {
    d3c_exact_step_with(game, state, cfg, &[])
}

/// As [`d3c_exact_step`], with some players frozen: their strategies and rows
/// never move and they contribute no descent direction.
pub fn d3c_exact_step_with<G: Game + ?Sized>(
    game: &G,
    state: &JointState,
    cfg: &ExactConfig,
    frozen: &[bool],
) -> JointState {
    let flow = Flow::new(game, &state.params, &state.a, frozen);
    step_from_flow(game, state, cfg, frozen, &flow)
}

fn step_from_flow<G: Game + ?Sized>(
    game: &G,
    state: &JointState,
    cfg: &ExactConfig,
    frozen: &[bool],
    flow: &Flow,
) -> JointState {
    let mut params: Vec<f64> = state.params.iter().zip(&flow.g).map(|(p, g)| p - cfg.dt * g).collect();
    game.project(&mut params);
    let rows = state
        .a
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            if frozen.get(i).copied().unwrap_or(false) || cfg.eta_a == 0.0 {
                return row.clone();
            }
            let mut grad = flow.surrogate_grad(game, &state.a, i, cfg.epsilon, frozen);
            if cfg.nu != 0.0 {
                for (g, k) in grad.iter_mut().zip(kl_anchor_grad(row)) {
                    *g += cfg.nu * k;
                }
            }
            mirror_step(row, &grad, cfg.eta_a, cfg.bounds)
        })
        .collect();
    JointState { params, a: MixingMatrix { rows }, step: state.step + 1 }
}

/// Initial mixing matrix and frozen players of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSetup {
    pub a0: MixingMatrix,
    pub frozen: Vec<bool>,
}

impl RunSetup {
    pub fn new(a0: MixingMatrix) -> Self {
        let n = a0.n();
        Self { a0, frozen: vec![false; n] }
    }

    /// Freeze the first `m` players; their rows become identity rows.
    pub fn with_frozen_prefix(mut self, m: usize) -> Self {
        let n = self.a0.n();
        let eye = MixingMatrix::identity(n);
        for i in 0..m {
            self.frozen[i] = true;
            self.a0.rows[i] = eye.rows[i].clone();
        }
        self
    }
}

/// Seeded run. `init` draws the starting strategy from the run's generator.
pub fn run_exact<G, F>(game: &G, cfg: &ExactConfig, setup: &RunSetup, init: F, seed: u64, run: usize) -> RunRecord
where
    G: Game + ?Sized,
    F: FnOnce(&mut ChaCha8Rng) -> Vec<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = init(&mut rng);
    assert_eq!(params.len(), game.dim(), "initial strategy has the wrong length");
    game.project(&mut params);
    let mut state = JointState { params, a: setup.a0.clone(), step: 0 };
    let mut record = RunRecord::new(run, seed, state.a.clone());
    let opt = game.opt_total().filter(|o| *o != 0.0);
    let poa_cfg = PoaConfig { dt: cfg.dt, mu_bar: f64::INFINITY, epsilon: cfg.epsilon };
    let log_every = cfg.log_every.max(1);
    loop {
        let flow = Flow::new(game, &state.params, &state.a, &setup.frozen);
        let snap = snapshot_from(game, &state.params, &state.a, &flow);
        let raw = game.losses(&state.params);
        record.track_budget(&raw, &snap.mixed_losses);
        let last = state.step == cfg.steps;
        if state.step.is_multiple_of(log_every) || last {
            let rho_max = local_poa_utilitarian(&snap, &poa_cfg).ok().map(|(_, m)| m);
            let ratio = opt.map(|o| raw.iter().sum::<f64>() / o);
            for (i, loss) in raw.iter().enumerate() {
                record.rows.push(RecordRow {
                    run,
                    step: state.step,
                    agent: i,
                    loss_or_return: *loss,
                    rho: rho_additive(snap.loss_rates[i], cfg.epsilon),
                    rho_max,
                    ratio_to_optimal: ratio,
                    attention: mean_relative_attention(&state.a, i),
                    mixing_row: state.a.rows[i].weights.clone(),
                });
            }
        }
        if last {
            record.final_values = raw;
            break;
        }
        state = step_from_flow(game, &state, cfg, &setup.frozen, &flow);
    }
    record.final_params = state.params;
    record.final_mixing = state.a;
    record
}

/// Worst relative error between [`grad_a_surrogate`] and central differences
/// of `ReLU(d/dt f_i^A + epsilon)` in each entry of row `i`, other rows fixed.
pub fn surrogate_fd_error<G: Game + ?Sized>(
    game: &G,
    params: &[f64],
    a: &MixingMatrix,
    i: usize,
    epsilon: f64,
    h: f64,
) -> f64 {
    let analytic = grad_a_surrogate(game, params, a, i, epsilon);
    let value = |m: &MixingMatrix| rho_additive(ddt_mixed_loss(game, params, m, i), epsilon);
    let mut worst: f64 = 0.0;
    for m in 0..a.n() {
        let mut ap = a.clone();
        ap.rows[i].weights[m] += h;
        let mut am = a.clone();
        am.rows[i].weights[m] -= h;
        let fd = (value(&ap) - value(&am)) / (2.0 * h);
        let scale = 1f64.max(fd.abs()).max(analytic[m].abs());
        worst = worst.max((analytic[m] - fd).abs() / scale);
    }
    worst
}

/// Brute-force local price of anarchy on the segment of one joint step.
///
/// Each player picks how far along its own descent direction to go, from 0 to
/// `dt` on a grid of `grid` points; the equilibrium of that restricted game is
/// found by best-response iteration. The result is its total loss over the
/// smallest total loss on the common segment.
pub fn local_poa_line_search<G: Game + ?Sized>(
    game: &G,
    params: &[f64],
    a: &MixingMatrix,
    dt: f64,
    grid: usize,
) -> f64 {
    assert!(grid >= 2, "grid needs both endpoints");
    let flow = Flow::new(game, params, a, &[]);
    let layout = game.layout().to_vec();
    let taus: Vec<f64> = (0..grid).map(|k| dt * k as f64 / (grid - 1) as f64).collect();
    let point = |choice: &[usize]| {
        let mut x = params.to_vec();
        for (i, r) in layout.iter().enumerate() {
            for k in r.clone() {
                x[k] -= taus[choice[i]] * flow.g[k];
            }
        }
        x
    };
    let mixed = |x: &[f64]| mix_losses(a, &game.losses(x)).expect("sizes agree");
    let n = game.n_players();
    let mut choice = vec![0usize; n];
    for _ in 0..1000 {
        let mut changed = false;
        for i in 0..n {
            let mut best = (choice[i], mixed(&point(&choice))[i]);
            for t in 0..grid {
                let mut c = choice.clone();
                c[i] = t;
                let v = mixed(&point(&c))[i];
                if v < best.1 {
                    best = (t, v);
                }
            }
            if best.0 != choice[i] {
                choice[i] = best.0;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let nash: f64 = mixed(&point(&choice)).iter().sum();
    let best = (0..grid)
        .map(|t| mixed(&point(&vec![t; n])).iter().sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    nash / best
}
