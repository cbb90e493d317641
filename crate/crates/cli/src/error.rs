//! Error-to-exit-code policy.
//!
//! 0: every reported check passed. 1: a mathematical verdict is negative
//! (non-positive state, not absolutely continuous, KMS residual above
//! threshold). 2: the input could not be parsed or is shaped wrong.
//! 3: a numerical integrity guarantee failed mid-computation.

use qlebesgue::Error;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Math(String),
    Integrity(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Math(_) => 1,
            CliError::Input(_) => 2,
            CliError::Integrity(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Math(m) | CliError::Integrity(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::NotSquare { .. }
            | Error::ShapeMismatch { .. }
            | Error::NotHermitian { .. }
            | Error::BadTolerance { .. }
            | Error::NonSquareGenerator { .. }
            | Error::ClosureOverflow { .. }
            | Error::NotInAlgebra { .. }
            | Error::ValuesLength { .. } => CliError::Input(msg),
            Error::NotPsd { .. }
            | Error::NotPositive { .. }
            | Error::NotAbsolutelyContinuous { .. }
            | Error::NotCyclic { .. }
            | Error::NotSeparating { .. }
            | Error::DegenerateGns => CliError::Math(msg),
            _ => CliError::Integrity(msg),
        }
    }
}
