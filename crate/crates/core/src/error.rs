use std::fmt;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input violated a precondition (non-positive radius, negative
    /// occupation, zero denominator, ...).
    InvalidInput(String),
    /// A pattern has no cubic term or is washed out; no fringes exist.
    NoFringes(String),
    /// A spatial grid is too short or too coarse for the requested pattern.
    /// The message names the required bounds.
    GridInsufficient(String),
    /// A quadrature did not reach its tolerance; carries the achieved residual.
    QuadratureFailure(String),
    /// A black-body table lookup fell outside the tabulated range; names the
    /// missing temperature.
    TableRange(String),
    /// Scenario configuration errors, collected exhaustively.
    Config(Vec<String>),
    /// No feasible protocol parameters exist for the requested constraints.
    Infeasible(String),
    /// File I/O, with path context.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(m) => write!(f, "invalid input: {m}"),
            Error::NoFringes(m) => write!(f, "no fringes: {m}"),
            Error::GridInsufficient(m) => write!(f, "grid insufficient: {m}"),
            Error::QuadratureFailure(m) => write!(f, "quadrature failure: {m}"),
            Error::TableRange(m) => write!(f, "black-body table range: {m}"),
            Error::Config(ms) => {
                writeln!(f, "configuration errors:")?;
                for m in ms {
                    writeln!(f, "  - {m}")?;
                }
                Ok(())
            }
            Error::Infeasible(m) => write!(f, "infeasible: {m}"),
            Error::Io(m) => write!(f, "io: {m}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
