use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadioError {
    #[error("{what} must be positive and finite, got {value}")]
    Domain { what: &'static str, value: f64 },
    #[error("demand needs {needed_bps} bit/s of channel rate but the top MCS offers {top_rate_bps} bit/s")]
    InfeasibleDemand { needed_bps: f64, top_rate_bps: u64 },
    #[error("invalid radio config: {0}")]
    InvalidConfig(String),
}

/// Malformed scenario or solution document.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{path}:{line}:{column}: field `{field}`: {message}")]
pub struct ParseError {
    pub path: String,
    /// Dotted path of the offending field, e.g. `faps[2].demand_bps`.
    pub field: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("could not place FAP {placed_so_far} after {attempts} consecutive rejected draws")]
    PlacementExhausted { placed_so_far: usize, attempts: usize },
    #[error("n_faps must be at least 1")]
    NoFaps,
    #[error("invalid venue: {0}")]
    InvalidVenue(String),
    #[error(transparent)]
    Radio(#[from] RadioError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("grid of {points} points exceeds the limit of {limit}")]
    GridTooLarge { points: u128, limit: u128 },
    #[error("invalid oracle config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("solution is not valid for this scenario: {0}")]
    InvalidSolution(String),
}
