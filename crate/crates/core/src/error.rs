use thiserror::Error;

use crate::eqmodel::ValidationReport;

/// Failures surfaced by propagators, monodromy construction and sweeps.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("equation violates structural assumptions:\n{0}")]
    Invalid(ValidationReport),

    #[error("unsupported by the analytic path: {0}")]
    Unsupported(String),

    #[error("non-finite coefficient in segment {segment}")]
    NonFinite { segment: usize },

    #[error("recurrence lost precision at segment {segment} (discrepancy {discrepancy:.3e})")]
    PrecisionLoss { segment: usize, discrepancy: f64 },

    #[error("time {t} outside the evaluable range [0, {end}]")]
    OutOfRange { t: f64, end: f64 },

    #[error("delayed argument {t_delayed} lies beyond the integration front {front}")]
    Ordering { t_delayed: f64, front: f64 },

    #[error("delayed argument overlaps the current step at t = {t} after {refinements} refinements")]
    Overlap { t: f64, refinements: u32 },

    #[error("solution blew up in period {period}")]
    BlowUp { period: usize },

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("analytic and numeric paths disagree: rho {analytic} vs {numeric}")]
    CrossCheck { analytic: f64, numeric: f64 },

    #[error("configuration: {0}")]
    Config(String),
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::PrecisionLoss { .. }
                | Error::Overlap { .. }
                | Error::BlowUp { .. }
                | Error::CrossCheck { .. }
                | Error::Ordering { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
