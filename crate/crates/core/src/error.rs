use crate::linalg::LinalgError;
use crate::sdp::{ProgramError, SolveStatus};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error("solver returned {status:?} for the {program} program")]
    SolverFailure { program: String, status: SolveStatus },
    #[error("{quantity}: routes disagree ({first} vs {second})")]
    RouteDisagreement { quantity: String, first: f64, second: f64 },
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("invalid witness: {0}")]
    InvalidWitness(String),
    #[error("{amplitudes} amplitudes exceed the limit of {limit}")]
    ResourceLimit { amplitudes: u128, limit: u128 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
