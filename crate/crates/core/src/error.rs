use thiserror::Error;

/// Everything that can go wrong while building inputs or evaluating a quantity.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "grid too coarse or too small: discrete norm {norm:.6} deviates from 1 by more than 5%"
    )]
    CoarseGrid { norm: f64 },

    #[error("{quantity} not converged: refining the rule changed it by {change:.3e}")]
    NonConvergence { quantity: &'static str, change: f64 },

    #[error("heralding probability {0:.3e} is too small to normalize the heralded state")]
    Unnormalizable(f64),

    #[error("singular value decomposition did not converge")]
    SvdFailed,

    #[error("target {target} is unachievable: {reason}")]
    Unachievable { target: f64, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::CoarseGrid { .. }
                | Error::NonConvergence { .. }
                | Error::Unnormalizable(_)
                | Error::SvdFailed
                | Error::Unachievable { .. }
        )
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            3
        } else {
            2
        }
    }

    pub(crate) fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) | Error::Config(_) | Error::Json(_) | Error::Csv(_) => {
                "config"
            }
            Error::Io(_) => "io",
            _ => "numerical",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
