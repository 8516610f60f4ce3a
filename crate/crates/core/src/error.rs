use thiserror::Error;

use crate::chain::Direction;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("chain needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),

    #[error("box bound u[{index}] = {value} must be nonnegative")]
    InvalidBound { index: usize, value: f64 },

    #[error("edge {edge} has an invalid {direction} constraint #{index}: {reason}")]
    InvalidConstraint {
        edge: usize,
        direction: Direction,
        index: usize,
        reason: String,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("edge {edge}: the sorted-slope subsolver only accepts linear constraints")]
    NonLinearConstraint { edge: usize },

    #[error("two-dimensional subproblem exceeded its budget of {budget} iterations")]
    IterationBudgetExceeded { budget: usize },

    #[error("waypoints {index} and {} coincide", index + 1)]
    CoincidentWaypoints { index: usize },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("invalid robot model: {0}")]
    InvalidModel(String),

    #[error(
        "{family} limit of joint {joint} is not above the static load at s = {position} \
         (margin {margin:.3e})"
    )]
    AssumptionViolated {
        family: &'static str,
        joint: usize,
        position: f64,
        margin: f64,
    },

    #[error("squared speed b[{index}] = {value} is negative")]
    NegativeSpeed { index: usize, value: f64 },

    #[error("speed profile stalls at s = {position}")]
    Stall { position: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
