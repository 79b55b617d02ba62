use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("value outside the domain: {0}")]
    Domain(String),
    #[error("enumeration budget exceeded: {count} supports (budget {budget})")]
    BudgetExceeded { count: u128, budget: u128 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{cell}: {source}")]
    Cell { cell: String, source: Box<Error> },
}

impl Error {
    /// Attaches the coordinates of the experiment cell that failed.
    pub fn in_cell(self, cell: impl Into<String>) -> Error {
        Error::Cell {
            cell: cell.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        })
    }
}
