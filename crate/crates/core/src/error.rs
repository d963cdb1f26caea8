use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("state is not normalized: |amp0|^2 + |amp1|^2 = {norm}")]
    Normalization { norm: f64 },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("block {index} truncated after {pulses} pulses with {bits} of {wanted} bits")]
    TruncatedBlock {
        index: u64,
        pulses: u64,
        bits: usize,
        wanted: usize,
        partial: Box<crate::protocol::BlockRecord>,
    },

    #[error(
        "solver did not converge after {iterations} iterations \
         (primal residual {primal_residual:.3e}, dual residual {dual_residual:.3e}, gap {gap:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        primal_residual: f64,
        dual_residual: f64,
        gap: f64,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn io(path: impl Into<std::path::PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
