use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the model computations.
///
/// Each variant carries enough context for a caller (or the CLI) to report
/// which module and which parameter was at fault.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{module}: domain error: {message}")]
    Domain {
        module: &'static str,
        message: String,
    },

    /// The Ohmic kernel without cutoff is a delta function; there is no
    /// pointwise value. Callers have to take the Markovian route.
    #[error("bath: damping kernel is local (2*gamma0*delta(t)); use the Markovian closed form")]
    LocalKernel,

    #[error("{module}: ultraviolet divergence: {message}")]
    UvDivergence {
        module: &'static str,
        message: String,
    },

    #[error("{module}: divergent sum or product: {message}")]
    Divergent {
        module: &'static str,
        message: String,
    },

    #[error("{module}: grid mismatch: {message}")]
    GridMismatch {
        module: &'static str,
        message: String,
    },

    #[error("greens: denominator vanishes at s = {re} + {im}i (pole of the Green's function)")]
    Pole { re: f64, im: f64 },

    #[error("{module}: matrix not positive definite: {message}")]
    NotPositiveDefinite {
        module: &'static str,
        message: String,
    },

    #[error("{module}: unsupported: {message}")]
    Unsupported {
        module: &'static str,
        message: String,
    },

    #[error("{module}: statistics: {message}")]
    Statistics {
        module: &'static str,
        message: String,
    },
}

impl Error {
    pub(crate) fn domain(module: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            module,
            message: message.into(),
        }
    }

    pub(crate) fn grid(module: &'static str, message: impl Into<String>) -> Self {
        Error::GridMismatch {
            module,
            message: message.into(),
        }
    }

    /// Name of the module that raised the error.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Domain { module, .. }
            | Error::UvDivergence { module, .. }
            | Error::Divergent { module, .. }
            | Error::GridMismatch { module, .. }
            | Error::NotPositiveDefinite { module, .. }
            | Error::Unsupported { module, .. }
            | Error::Statistics { module, .. } => module,
            Error::LocalKernel => "bath",
            Error::Pole { .. } => "greens",
        }
    }
}
