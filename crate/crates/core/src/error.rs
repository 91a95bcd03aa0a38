use crate::C64;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error(
        "path budget exceeded: d = {dim}, L = {mem_len} needs (d^2)^(L+1) = {states} path states \
         (budget {budget}); lower the memory length or raise --budget"
    )]
    Budget {
        dim: usize,
        mem_len: usize,
        states: u128,
        budget: u128,
    },

    #[error("quadrature did not converge (estimate {estimate}, error estimate {error:.3e})")]
    Quadrature { estimate: C64, error: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config: {0}")]
    Config(String),

    #[error("cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Config(_) => 2,
            Error::Budget { .. } => 3,
            Error::Quadrature { .. } | Error::Numerical(_) => 4,
            Error::Cache(_) | Error::Io(_) => 1,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
