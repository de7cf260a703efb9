use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violates a documented precondition.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A state is outside the domain of a coordinate chart or constraint.
    #[error("state error: {0}")]
    State(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    /// The Newton matrix became singular; the seed sits on or next to a
    /// fold or branch point and should be approached by continuation.
    #[error(
        "Jacobian singular near eta = {eta} (pivot {pivot:e}); \
         likely a bifurcation point, enter it by continuation instead"
    )]
    NearBifurcation { eta: f64, pivot: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::State(_) => 2,
            Error::Numeric(_) | Error::NotConverged { .. } | Error::NearBifurcation { .. } => 3,
            Error::Io(_) | Error::Format(_) => 4,
        }
    }
}

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
