//! Small reinforcement-learning testbeds for the bandit rule.

pub mod coins;
pub mod learner;
pub mod reinforce;
pub mod ring;

pub use coins::{coins_reset, coins_step, CoinsWorld};
pub use learner::{CoinsLearner, TrustLearner};
pub use reinforce::{reinforce_update, Episode, LinearSoftmaxPolicy, LinearValue, ReinforceConfig, Transition};
pub use ring::{ring_optimal_return, ring_reset, ring_step, RingOracle, RingWorld};
