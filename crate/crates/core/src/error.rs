use crate::action::IterationTrace;
use crate::flow::ContactState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("Newton iteration did not converge (last residual {residual:.3e})")]
    NoConvergence { residual: f64 },

    #[error("non-finite value: {0}")]
    NumericalDomain(String),

    #[error("trajectory blew up after t = {:.6}", last.t)]
    BlowUp { last: Box<ContactState> },

    #[error("no converged branches: {0}")]
    NoSolution(String),

    #[error("infeasible grid: {0}")]
    InfeasibleGrid(String),

    #[error("fixed-point iteration stopped after {} passes, last difference {:.3e}", trace.len(), trace.last().unwrap_or(f64::NAN))]
    NonConvergence { trace: IterationTrace },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("construction error: {0}")]
    Construction(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Config(_) | Error::Precondition(_) => 2,
            Error::NoConvergence { .. }
            | Error::NumericalDomain(_)
            | Error::BlowUp { .. }
            | Error::NoSolution(_)
            | Error::InfeasibleGrid(_)
            | Error::NonConvergence { .. } => 3,
            Error::Construction(_) => 4,
            Error::Internal(_) | Error::Io(_) => 1,
        }
    }
}
