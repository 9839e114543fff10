use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A non-finite or degenerate intermediate in a closed-form expression.
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("quadrature did not converge (residual {residual:.3e} at u = {u_reached})")]
    Integration { residual: f64, u_reached: f64 },

    #[error("training diverged at epoch {epoch}, batch {batch}: loss is not finite (gradient norm {grad_norm:.4e})")]
    Diverged { epoch: usize, batch: usize, grad_norm: f64 },

    #[error("{0}")]
    Optimizer(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    /// True for numerical/domain failures (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. } | Error::Integration { .. } | Error::Diverged { .. } | Error::Optimizer(_)
        )
    }
}
