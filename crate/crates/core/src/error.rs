use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum D3cError {
    #[error("self-weight {a0} must lie strictly between 1/n = {lower} and 1")]
    InvalidSelfWeight { a0: f64, lower: f64 },
    #[error("need at least 2 players, got {0}")]
    TooFewPlayers(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("row {row} is not on the probability simplex (sum {sum}, min {min})")]
    NotStochastic { row: usize, sum: f64, min: f64 },
    #[error("logit bounds require l < h, got l = {l}, h = {h}")]
    InvalidBounds { l: f64, h: f64 },
    #[error("mixed loss of agent {agent} is {value}; the multiplicative bound needs positive losses, use rho_additive instead")]
    NonPositiveLoss { agent: usize, value: f64 },
    #[error("negative probability {value} for player {player}")]
    NegativeProbability { player: usize, value: f64 },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, D3cError>;
