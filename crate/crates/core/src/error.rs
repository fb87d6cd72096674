use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("Hamming weight {weight} outside [0, {n_b}]")]
    InvalidWeight { weight: usize, n_b: usize },

    #[error("pattern has weight {found}, expected {expected}")]
    PatternMismatch { expected: usize, found: usize },

    #[error("oracle dimension cap exceeded: n_b = {n_b} (max {max})")]
    DimensionCap { n_b: usize, max: usize },

    #[error("time grid must be strictly increasing and uniformly spaced")]
    NonUniformGrid,

    #[error("frequency grid too coarse: spacing {spacing} Hz exceeds a quarter of the narrowest linewidth {linewidth} Hz")]
    GridTooCoarse { spacing: f64, linewidth: f64 },

    #[error("aliasing on line {line}: oscillation at {freq_hz} Hz is not resolved below the {nyquist_hz} Hz Nyquist limit")]
    Aliasing {
        line: usize,
        freq_hz: f64,
        nyquist_hz: f64,
    },

    #[error("zero lopsidedness carries no field information")]
    ZeroLopsidedness,

    #[error("noise model `{0}` is not applicable here")]
    NotApplicable(&'static str),

    #[error("no finite optimum: {0}")]
    Unbounded(&'static str),

    #[error("single-shot phase {phase} rad exceeds the unambiguous range (pi/2)")]
    PhaseWrap { phase: f64 },

    #[error("configuration mismatch: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
