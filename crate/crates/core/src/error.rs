use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// δa = 0: the n = 0 pole sits on the integration contour.
    #[error("domain error: spontaneous-pole degenerate case (da = 0 has no transition)")]
    SpontaneousPole,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical non-convergence: {message} (last values: {last_values:?})")]
    NonConvergence { message: String, last_values: Vec<f64> },

    #[error("integration path error: kernel argument crossed the log branch cut at t = {t}")]
    BranchCut { t: f64 },

    #[error("pole series not converged after {terms} terms (last term {last_term:e})")]
    Truncation { terms: usize, last_term: f64 },

    #[error("validity window violated: {0}")]
    Validity(String),

    #[error("cascade step {index}: {source}")]
    Step { index: usize, source: Box<Error> },
}

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::SpontaneousPole | Error::Config(_) => 1,
            Error::NonConvergence { .. } | Error::BranchCut { .. } | Error::Truncation { .. } => 2,
            Error::Validity(_) => 3,
            Error::Step { source, .. } => source.exit_code(),
        }
    }
}

/// Non-fatal conditions attached to results. Rendered as `WARN <code> <message>`.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// First-order weight above one.
    PerturbationStrained { p21: f64 },
    /// |δa·τ| not small, so the phase expansion is unreliable.
    ExpansionStrained { da_tau: f64 },
    /// A validity ratio lies between the strict and the loose threshold.
    ValidityMarginal { detail: String },
    /// Validity check bypassed on request.
    ValidityOverridden { detail: String },
}

impl Warning {
    pub fn code(&self) -> &'static str {
        match self {
            Warning::PerturbationStrained { .. } => "perturbation-strained",
            Warning::ExpansionStrained { .. } => "expansion-strained",
            Warning::ValidityMarginal { .. } => "validity-marginal",
            Warning::ValidityOverridden { .. } => "validity-overridden",
        }
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::PerturbationStrained { p21 } => {
                write!(f, "first-order weight p21={p21:.6} exceeds 1")
            }
            Warning::ExpansionStrained { da_tau } => {
                write!(f, "|da*tau|={da_tau:.4} is not small")
            }
            Warning::ValidityMarginal { detail } | Warning::ValidityOverridden { detail } => f.write_str(detail),
        }
    }
}

pub(crate) fn require_positive(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain(format!("{name} must be finite and positive, got {value}")))
    }
}

pub(crate) fn require_finite(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {value}")))
    }
}
