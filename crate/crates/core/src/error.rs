use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} is not a success probability in (0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("invalid chain: {}", .0.join("; "))]
    InvalidChain(Vec<String>),

    /// The target is unreachable from some state, so first-passage moments are infinite.
    #[error("first-passage moments diverge: target unreachable from state(s) {states:?}")]
    Divergent { states: Vec<usize> },

    #[error("linear solve residual {residual:e} exceeds {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("closed-form routes disagree: {left} vs {right}")]
    Inconsistent { left: f64, right: f64 },

    #[error("no completed cycles within a horizon of {horizon} slots")]
    NoCompletedCycles { horizon: u64 },

    #[error("{available} cycles leave nothing to measure after discarding {discarded}")]
    EmptyAfterWarmup { available: usize, discarded: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("rows do not share a fixed parameter for the {axis} axis")]
    MixedFixedParameter { axis: &'static str },

    #[error("nothing to plot or write: row set is empty")]
    EmptyRows,

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the filesystem rather than of the inputs.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(_)),
            _ => false,
        }
    }
}
