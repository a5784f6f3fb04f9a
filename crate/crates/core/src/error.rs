use thiserror::Error;

/// Errors shared across the laboratory modules.
#[derive(Debug, Clone, Error)]
pub enum LabError {
    /// A configuration failed validation (probabilities, matrices, schemas).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An orbit window does not cover the coordinates an operation reads.
    #[error("window too small: needs coordinates [{needed_lo}, {needed_hi}], window covers [{have_lo}, {have_hi}]")]
    WindowTooSmall {
        needed_lo: i64,
        needed_hi: i64,
        have_lo: i64,
        have_hi: i64,
    },

    /// No return to the target set within the configured cap.
    #[error("no return to the target set within {cap} steps")]
    ReturnCapExceeded { cap: u64 },

    /// No sampled point satisfied the inducing indicator.
    #[error("no sampled point satisfies the indicator")]
    EmptyIndicator,

    /// Singular values of a product are not separated enough to read off
    /// well-defined flags (degenerate or unresolved spectrum).
    #[error("insufficient singular value gap: min ratio {min_ratio:.3e} < required {required:.3e}")]
    InsufficientGap { min_ratio: f64, required: f64 },

    /// A triangular factor degenerated during the product recursion.
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    /// Two flags are not in general position.
    #[error("flags are not transverse (margin {margin:.3e})")]
    NotTransverse { margin: f64 },

    /// A line tuple does not span the ambient space.
    #[error("degenerate line tuple (|det| = {det:.3e})")]
    DegenerateTuple { det: f64 },
}

pub type Result<T> = std::result::Result<T, LabError>;
