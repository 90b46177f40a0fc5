use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A physical parameter is outside its admissible domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// T_c + A = 0: the cavity has no round-trip loss and no finite finesse.
    #[error("degenerate lossless cavity: coupler transmission + losses must be > 0")]
    DegenerateCavity,

    #[error("frequency {0} Hz is outside the domain of this operation")]
    FrequencyDomain(f64),

    #[error("quadrature did not converge on [{lo}, {hi}] Hz (error estimate {estimate:e})")]
    QuadratureNonConvergence { lo: f64, hi: f64, estimate: f64 },

    #[error(
        "linearization invalid: modulation {fm_amplitude} Hz is not below 0.1 x {bandwidth} Hz"
    )]
    LinearizationInvalid { fm_amplitude: f64, bandwidth: f64 },

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("spectrum conversion failed at bin {index} (f = {frequency} Hz): {reason}")]
    Conversion {
        index: usize,
        frequency: f64,
        reason: String,
    },

    #[error("cannot fit: {0}")]
    DegenerateFit(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    /// Values parse but violate a physical invariant; names the keys involved.
    #[error("config keys {}: {message}", keys.join(", "))]
    ConfigValidation { keys: Vec<String>, message: String },

    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
