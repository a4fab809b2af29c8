//! Decentralized, differentiable, dynamic compromise (D3C).
//!
//! Agents share their losses through a row-stochastic mixing matrix and adapt
//! their rows to push down a local estimate of the price of anarchy.

pub mod bandit;
pub mod error;
pub mod exact;
pub mod games;
pub mod mixing;
pub mod poa;
pub mod record;
pub mod rl;

pub use error::{D3cError, Result};
pub use mixing::{LogitBounds, MixingMatrix, MixingRow};
pub use record::{RecordRow, RunRecord};

/// Generator used for every seeded run.
pub type Rng = rand_chacha::ChaCha8Rng;
