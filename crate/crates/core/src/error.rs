use thiserror::Error;

/// Errors produced by the solver and obstruction calculator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid configuration value (grid size, degrees, exponents, parameters).
    #[error("configuration error: {0}")]
    Config(String),

    /// A field or scalar contained NaN or an infinity.
    #[error("numeric input error: {0}")]
    NumericInput(String),

    /// Operation requires a Higgs configuration of a different rank.
    #[error("wrong rank: expected rank {expected}, got rank {got}")]
    WrongRank { expected: usize, got: usize },

    /// Parameters lie outside the window where solutions can exist.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// An existence obstruction fired; the solver refused to run.
    #[error("obstructed: {0}")]
    Obstructed(String),

    /// One component of a rank-2 Higgs field vanishes identically.
    #[error("degenerate pair: component {zero_component} of the Higgs field is zero, the saturation is the other summand")]
    DegeneratePair { zero_component: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A rational expression hit a vanishing denominator.
    #[error("pole: {0}")]
    Pole(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported rank: {0}")]
    UnsupportedRank(String),

    /// Inconsistent quiver data (unknown vertex, rank mismatch on an arrow).
    #[error("model error: {0}")]
    Model(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn ensure_finite(what: &str, values: &[f64]) -> Result<()> {
    if let Some(k) = values.iter().position(|x| !x.is_finite()) {
        return Err(Error::NumericInput(format!(
            "{what} has a non-finite entry at index {k}"
        )));
    }
    Ok(())
}
