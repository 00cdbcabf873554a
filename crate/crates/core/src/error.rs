use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (bad index, empty input,
    /// out-of-range parameter).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// The neighbor velocity vectors summed to (numerically) zero.
    #[error("degenerate heading sum (vector sum magnitude {magnitude:e})")]
    DegenerateSum { magnitude: f64 },

    /// The shill law was asked to act outside the regime its guarantee covers.
    #[error("scenario violation at tick {tick}: agent {agent} has heading {heading} outside [0, pi)")]
    ScenarioViolation { tick: u64, agent: usize, heading: f64 },

    #[error("invalid command: {0}")]
    InvalidCommand(String),

    #[error("trajectory has {got} states, certification needs at least {needed}")]
    InsufficientWindow { needed: usize, got: usize },

    #[error("bound anomaly: eta(n) = {eta_n} is not below epsilon = {epsilon}")]
    BoundAnomaly { eta_n: f64, epsilon: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed trajectory: {0}")]
    Trajectory(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
