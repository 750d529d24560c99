use thiserror::Error;

/// Errors raised by the link models, analysis kernels and trial engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("carrier {carrier_ghz} GHz outside the {law} band [{min_ghz}, {max_ghz}] GHz")]
    CarrierOutOfBand {
        law: &'static str,
        carrier_ghz: f64,
        min_ghz: f64,
        max_ghz: f64,
    },

    #[error("distance {distance_m} m outside the {law} range [{min_m}, {max_m}] m")]
    DistanceOutOfRange {
        law: &'static str,
        distance_m: f64,
        min_m: f64,
        max_m: f64,
    },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("numeric domain violation: {0}")]
    NumericDomain(String),

    #[error("quadrature did not converge on [{lower}, {upper}]: estimate {estimate}, relative change {relative_change}")]
    Quadrature {
        lower: f64,
        upper: f64,
        estimate: f64,
        relative_change: f64,
    },

    #[error("inconsistent trial plan: {0}")]
    Plan(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, found })
    }
}
