use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("generator is not hermitian: {0}")]
    StarViolation(String),

    #[error("generators do not sum to the identity: {0}")]
    UnitViolation(String),

    #[error("degenerate spectrum after {attempts} attempts: {detail}")]
    DegenerateSpectrum { attempts: usize, detail: String },

    /// Farkas-type certificate `y`: `b·y = margin > 0` while `A*(y)` is negative semidefinite.
    #[error("infeasible (certificate margin {margin:.3e})")]
    Infeasible { certificate: Vec<f64>, margin: f64 },

    #[error("objective is unbounded above on the feasible set")]
    Unbounded,

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("internal consistency error: {0}")]
    InternalConsistency(String),

    #[error("block {block}: {source}")]
    InBlock {
        block: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn in_block(self, block: usize) -> Self {
        Error::InBlock {
            block,
            source: Box::new(self),
        }
    }

    /// Strips block wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::InBlock { source, .. } => source.root(),
            e => e,
        }
    }
}
