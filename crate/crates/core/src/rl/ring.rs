//! Trust-Your-Brother: two prey and a scripted predator on a ring of six cells.
//!
//! One step: the predator moves one cell toward the nearer prey unless it is
//! already next to one (ties broken at random), then both prey move at once.
//! A prey pays 0.01 for any attempted move and 1 if it ends next to the
//! predator.

use rand::Rng;

pub const CELLS: usize = 6;
pub const HORIZON: usize = 5;
pub const MOVE_COST: f64 = 0.01;
pub const CAPTURE_COST: f64 = 1.0;

/// Actions: stay, one cell clockwise (+1), one cell counter-clockwise (-1).
pub const ACTIONS: usize = 3;
const OFFSET: [usize; ACTIONS] = [0, 1, CELLS - 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RingWorld {
    pub predator: usize,
    pub prey: [usize; 2],
    pub step_idx: usize,
}

pub fn ring_dist(a: usize, b: usize) -> usize {
    let d = (a + CELLS - b) % CELLS;
    d.min(CELLS - d)
}

fn adjacent(a: usize, b: usize) -> bool {
    ring_dist(a, b) == 1
}

impl RingWorld {
    pub fn done(&self) -> bool {
        self.step_idx >= HORIZON
    }

    /// Counter-clockwise minus clockwise distance from the predator to each
    /// prey; both prey see the same vector.
    pub fn observation(&self) -> [f64; 2] {
        let feat = |x: usize| {
            let ccw = (x + CELLS - self.predator) % CELLS;
            let cw = (self.predator + CELLS - x) % CELLS;
            ccw as f64 - cw as f64
        };
        [feat(self.prey[0]), feat(self.prey[1])]
    }

    /// Possible predator positions after its move, with probabilities.
    fn predator_moves(&self) -> Vec<(f64, usize)> {
        let p = self.predator;
        let [a, b] = self.prey;
        if adjacent(p, a) || adjacent(p, b) {
            return vec![(1.0, p)];
        }
        let toward = |t: usize| {
            if (t + CELLS - p) % CELLS < (p + CELLS - t) % CELLS {
                (p + 1) % CELLS
            } else {
                (p + CELLS - 1) % CELLS
            }
        };
        let (da, db) = (ring_dist(p, a), ring_dist(p, b));
        if da < db {
            vec![(1.0, toward(a))]
        } else if db < da {
            vec![(1.0, toward(b))]
        } else {
            vec![(0.5, toward(a)), (0.5, toward(b))]
        }
    }

    /// Prey positions after simultaneous moves. A prey cannot enter the
    /// predator's cell or the other prey's final cell; equal targets block both.
    fn prey_moves(&self, predator: usize, actions: [usize; 2]) -> [usize; 2] {
        let from = self.prey;
        let target = [0, 1].map(|i| (from[i] + OFFSET[actions[i]]) % CELLS);
        let moving = [0, 1].map(|i| actions[i] != 0);
        let mut ok = [0, 1].map(|i| target[i] != predator);
        if moving[0] && moving[1] && target[0] == target[1] {
            ok = [false, false];
        }
        // A blocked prey stays put, which can in turn block the other one.
        for _ in 0..3 {
            let post = [0, 1].map(|i| if ok[i] { target[i] } else { from[i] });
            for i in 0..2 {
                if ok[i] && moving[i] && target[i] == post[1 - i] {
                    ok[i] = false;
                }
            }
        }
        [0, 1].map(|i| if ok[i] { target[i] } else { from[i] })
    }

    /// All outcomes of a step with their probabilities.
    pub fn outcomes(&self, actions: [usize; 2]) -> Vec<(f64, RingWorld, [f64; 2])> {
        assert!(!self.done(), "episode already finished");
        self.predator_moves()
            .into_iter()
            .map(|(prob, predator)| {
                let prey = self.prey_moves(predator, actions);
                let rewards = [0, 1].map(|i| {
                    let mv = if actions[i] != 0 { -MOVE_COST } else { 0.0 };
                    let cap = if adjacent(predator, prey[i]) { -CAPTURE_COST } else { 0.0 };
                    mv + cap
                });
                (prob, RingWorld { predator, prey, step_idx: self.step_idx + 1 }, rewards)
            })
            .collect()
    }
}

/// Start with the prey in adjacent cells and prey `close_side` one empty cell
/// away from the predator.
pub fn ring_reset<R: Rng + ?Sized>(close_side: usize, rng: &mut R) -> RingWorld {
    assert!(close_side < 2, "close_side is 0 or 1");
    let p = rng.random_range(0..CELLS);
    let s = if rng.random::<bool>() { 1 } else { CELLS - 1 };
    let close = (p + 2 * s) % CELLS;
    let far = (p + 3 * s) % CELLS;
    let prey = if close_side == 0 { [close, far] } else { [far, close] };
    RingWorld { predator: p, prey, step_idx: 0 }
}

pub fn ring_step<R: Rng + ?Sized>(world: &RingWorld, actions: [usize; 2], rng: &mut R) -> (RingWorld, [f64; 2]) {
    let outs = world.outcomes(actions);
    let k = if outs.len() == 1 { 0 } else { rng.random_range(0..outs.len()) };
    let (_, w, r) = outs[k];
    (w, r)
}

/// Reference returns of the ring world, averaged over every start state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingOracle {
    /// Best total (both prey) expected return of any joint policy.
    pub optimal_total: f64,
    /// Best worst-off individual return; mirrored starts make this half the total.
    pub maximin_individual: f64,
    /// Total return at the equilibrium reached by best-response iteration from
    /// both prey staying put.
    pub selfish_total: f64,
    /// Total return when both prey never move.
    pub frozen_total: f64,
}

fn index(w: &RingWorld) -> usize {
    ((w.step_idx * CELLS + w.predator) * CELLS + w.prey[0]) * CELLS + w.prey[1]
}

const STATES: usize = (HORIZON + 1) * CELLS * CELLS * CELLS;

fn all_states(t: usize) -> impl Iterator<Item = RingWorld> {
    (0..CELLS).flat_map(move |p| {
        (0..CELLS).flat_map(move |a| (0..CELLS).map(move |b| RingWorld { predator: p, prey: [a, b], step_idx: t }))
    })
}

fn starts() -> Vec<RingWorld> {
    let mut out = Vec::new();
    for p in 0..CELLS {
        for s in [1, CELLS - 1] {
            let close = (p + 2 * s) % CELLS;
            let far = (p + 3 * s) % CELLS;
            out.push(RingWorld { predator: p, prey: [close, far], step_idx: 0 });
            out.push(RingWorld { predator: p, prey: [far, close], step_idx: 0 });
        }
    }
    out
}

type Policy = Vec<usize>;

/// Expected per-prey return of a joint state-feedback policy.
fn evaluate(policies: &[Policy; 2]) -> Vec<[f64; 2]> {
    let mut v = vec![[0.0; 2]; STATES];
    for t in (0..HORIZON).rev() {
        for w in all_states(t) {
            let acts = [policies[0][index(&w)], policies[1][index(&w)]];
            let mut val = [0.0; 2];
            for (p, next, r) in w.outcomes(acts) {
                let vn = v[index(&next)];
                for i in 0..2 {
                    val[i] += p * (r[i] + vn[i]);
                }
            }
            v[index(&w)] = val;
        }
    }
    v
}

/// Prey `i`'s own-return best response to the other prey's policy; ties go
/// to the lower action index, so staying wins ties.
fn best_response(i: usize, other: &Policy) -> Policy {
    let mut v = vec![0.0; STATES];
    let mut pol = vec![0; STATES];
    for t in (0..HORIZON).rev() {
        for w in all_states(t) {
            let mut best = (0, f64::NEG_INFINITY);
            for a in 0..ACTIONS {
                let mut acts = [0; 2];
                acts[i] = a;
                acts[1 - i] = other[index(&w)];
                let q: f64 = w.outcomes(acts).iter().map(|(p, n, r)| p * (r[i] + v[index(n)])).sum();
                if q > best.1 + 1e-12 {
                    best = (a, q);
                }
            }
            pol[index(&w)] = best.0;
            v[index(&w)] = best.1;
        }
    }
    pol
}

fn mean_total(v: &[[f64; 2]]) -> f64 {
    let s = starts();
    s.iter().map(|w| v[index(w)][0] + v[index(w)][1]).sum::<f64>() / s.len() as f64
}

/// Brute-force reference returns over all deterministic state-feedback policies.
pub fn ring_optimal_return() -> RingOracle {
    let mut v = vec![0.0; STATES];
    for t in (0..HORIZON).rev() {
        for w in all_states(t) {
            let mut best = f64::NEG_INFINITY;
            for a in 0..ACTIONS {
                for b in 0..ACTIONS {
                    let q: f64 = w.outcomes([a, b]).iter().map(|(p, n, r)| p * (r[0] + r[1] + v[index(n)])).sum();
                    best = best.max(q);
                }
            }
            v[index(&w)] = best;
        }
    }
    let s = starts();
    let optimal_total = s.iter().map(|w| v[index(w)]).sum::<f64>() / s.len() as f64;

    let stay: Policy = vec![0; STATES];
    let frozen_total = mean_total(&evaluate(&[stay.clone(), stay.clone()]));
    let mut pols = [stay.clone(), stay];
    for _ in 0..100 {
        let p0 = best_response(0, &pols[1]);
        let p1 = best_response(1, &p0);
        let stable = p0 == pols[0] && p1 == pols[1];
        pols = [p0, p1];
        if stable {
            break;
        }
    }
    let selfish_total = mean_total(&evaluate(&pols));
    RingOracle { optimal_total, maximin_individual: optimal_total / 2.0, selfish_total, frozen_total }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reset_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut seen = [false; 2];
        for k in 0..200 {
            let side = k % 2;
            let w = ring_reset(side, &mut rng);
            assert_ne!(w.prey[0], w.prey[1]);
            assert_ne!(w.predator, w.prey[0]);
            assert_ne!(w.predator, w.prey[1]);
            assert_eq!(ring_dist(w.prey[0], w.prey[1]), 1);
            assert_eq!(ring_dist(w.predator, w.prey[side]), 2);
            assert_eq!(ring_dist(w.predator, w.prey[1 - side]), 3);
            seen[side] = true;
        }
        assert!(seen[0] && seen[1]);
    }

    #[test]
    fn reward_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // Predator at 0 chases the prey at 2; the prey at 3 stays out of reach.
        let w = RingWorld { predator: 0, prey: [2, 3], step_idx: 0 };
        let (w2, r) = ring_step(&w, [0, 0], &mut rng);
        assert_eq!(w2.predator, 1);
        assert_eq!(r, [-1.0, 0.0]);
        // A prey stepping into a cell next to the predator pays both costs.
        let w = RingWorld { predator: 0, prey: [2, 5], step_idx: 0 };
        let (w2, r) = ring_step(&w, [2, 0], &mut rng);
        assert_eq!(w2.prey, [1, 5]);
        assert!((r[0] + 1.01).abs() < 1e-12);
        assert_eq!(r[1], -1.0);
        // Blocked moves still cost.
        let w = RingWorld { predator: 0, prey: [2, 3], step_idx: 0 };
        let (w2, r) = ring_step(&w, [1, 0], &mut rng);
        assert_eq!(w2.prey, [2, 3]);
        assert!((r[0] + 1.01).abs() < 1e-12);
    }

    #[test]
    fn distances_and_observation() {
        for a in 0..CELLS {
            for b in 0..CELLS {
                let ccw = (b + CELLS - a) % CELLS;
                let cw = (a + CELLS - b) % CELLS;
                if a != b {
                    assert_eq!(ccw + cw, CELLS);
                }
            }
        }
        let w = RingWorld { predator: 0, prey: [2, 4], step_idx: 0 };
        let m = RingWorld { predator: 0, prey: [4, 2], step_idx: 0 };
        let (o, om) = (w.observation(), m.observation());
        assert_eq!(o, [-2.0, 2.0]);
        assert_eq!(om, [2.0, -2.0]);
    }

    #[test]
    fn oracle_values() {
        let o = ring_optimal_return();
        assert!((o.optimal_total + 0.1).abs() < 1e-12, "{o:?}");
        assert!((o.frozen_total + 5.0).abs() < 1e-12);
        assert!((o.selfish_total + 5.0).abs() < 1e-12);
        assert!((o.maximin_individual + 0.05).abs() < 1e-12);
    }
}
