//! Two agents collecting coins on a 5x5 grid.
//!
//! Agent `k` owns coin type `k`. Whoever picks up a coin gets +1; if the coin
//! belongs to the other agent, that agent gets -2.

use rand::Rng;

pub const GRID: usize = 5;
pub const CELLS: usize = GRID * GRID;
pub const HORIZON: usize = 500;
pub const SPAWN_P: f64 = 0.005;
pub const OWN_REWARD: f64 = 1.0;
pub const STOLEN_PENALTY: f64 = -2.0;

/// Actions: up, down, left, right, stay.
pub const ACTIONS: usize = 5;
/// One-hot planes: self, other agent, own coins, other's coins.
pub const FEATURES: usize = 4 * CELLS;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoinsWorld {
    /// Cell index `row * GRID + col` of each agent.
    pub agents: [usize; 2],
    pub coins: [Option<usize>; CELLS],
    pub t: usize,
}

fn moved(cell: usize, action: usize) -> usize {
    let (r, c) = (cell / GRID, cell % GRID);
    let (r, c) = match action {
        0 => (r.saturating_sub(1), c),
        1 => ((r + 1).min(GRID - 1), c),
        2 => (r, c.saturating_sub(1)),
        3 => (r, (c + 1).min(GRID - 1)),
        _ => (r, c),
    };
    r * GRID + c
}

impl CoinsWorld {
    pub fn empty(agents: [usize; 2]) -> Self {
        Self { agents, coins: [None; CELLS], t: 0 }
    }

    pub fn done(&self) -> bool {
        self.t >= HORIZON
    }

    /// For each coin type, with probability `SPAWN_P`, place a coin on a
    /// uniformly chosen cell holding neither a coin nor an agent.
    pub fn spawn_coins<R: Rng + ?Sized>(&mut self, rng: &mut R) -> [bool; 2] {
        let mut spawned = [false; 2];
        for (kind, s) in spawned.iter_mut().enumerate() {
            if rng.random::<f64>() >= SPAWN_P {
                continue;
            }
            let free: Vec<usize> =
                (0..CELLS).filter(|c| self.coins[*c].is_none() && !self.agents.contains(c)).collect();
            if free.is_empty() {
                continue;
            }
            let cell = free[rng.random_range(0..free.len())];
            self.coins[cell] = Some(kind);
            *s = true;
        }
        spawned
    }

    pub fn observation(&self, agent: usize) -> Vec<f64> {
        let mut o = vec![0.0; FEATURES];
        o[self.agents[agent]] = 1.0;
        o[CELLS + self.agents[1 - agent]] = 1.0;
        for (cell, coin) in self.coins.iter().enumerate() {
            if let Some(kind) = coin {
                let plane = if *kind == agent { 2 } else { 3 };
                o[plane * CELLS + cell] = 1.0;
            }
        }
        o
    }
}

pub fn coins_reset<R: Rng + ?Sized>(rng: &mut R) -> CoinsWorld {
    let a = rng.random_range(0..CELLS);
    let mut b = rng.random_range(0..CELLS - 1);
    if b >= a {
        b += 1;
    }
    CoinsWorld::empty([a, b])
}

/// Move both agents, resolve pickups, then spawn. When both agents land on
/// the same coin it goes to one of them at random.
pub fn coins_step<R: Rng + ?Sized>(world: &CoinsWorld, actions: [usize; 2], rng: &mut R) -> (CoinsWorld, [f64; 2]) {
    assert!(!world.done(), "episode already finished");
    let mut w = world.clone();
    w.agents = [moved(world.agents[0], actions[0]), moved(world.agents[1], actions[1])];
    let mut rewards = [0.0; 2];
    let order = if w.agents[0] == w.agents[1] && rng.random::<bool>() { [1, 0] } else { [0, 1] };
    for k in order {
        let cell = w.agents[k];
        if let Some(kind) = w.coins[cell].take() {
            rewards[k] += OWN_REWARD;
            if kind != k {
                rewards[kind] += STOLEN_PENALTY;
            }
        }
    }
    w.spawn_coins(rng);
    w.t += 1;
    (w, rewards)
}
