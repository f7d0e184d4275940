//! Exit codes and the error type every subcommand returns.

use std::fmt;
use std::io;

use capmeter_core::bounds::BoundError;
use capmeter_core::data::DataError;
use capmeter_core::linalg::LinalgError;
use capmeter_core::lowerbound::LowerBoundError;
use capmeter_core::measures::MeasureError;
use capmeter_core::nn::NnError;
use capmeter_core::train::TrainError;

/// Process exit codes.
pub mod code {
    pub const OK: i32 = 0;
    pub const INTERNAL: i32 = 1;
    /// Unknown flag, bad flag value or missing subcommand.
    pub const USAGE: i32 = 2;
    pub const MISSING_FILE: i32 = 3;
    pub const BAD_CONFIG: i32 = 4;
    /// Arguments parse but are out of range or inconsistent with the inputs.
    pub const INVALID_ARGUMENT: i32 = 5;
    pub const TRAINING_FAILED: i32 = 6;
    pub const SELFTEST_FAILED: i32 = 7;
    /// Input file exists but is not a valid dataset or checkpoint.
    pub const BAD_INPUT: i32 = 8;
    pub const WRITE_FAILED: i32 = 9;
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(code::INVALID_ARGUMENT, message)
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(code::USAGE, message)
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(code::BAD_CONFIG, message)
    }

    /// Classifies an i/o failure on an input path.
    pub fn read(path: &str, e: &io::Error) -> Self {
        if e.kind() == io::ErrorKind::NotFound {
            Self::new(code::MISSING_FILE, format!("{path}: no such file"))
        } else {
            Self::new(code::BAD_INPUT, format!("cannot read {path}: {e}"))
        }
    }

    pub fn write(path: &str, e: &io::Error) -> Self {
        Self::new(code::WRITE_FAILED, format!("cannot write {path}: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

fn io_code(e: &io::Error) -> i32 {
    if e.kind() == io::ErrorKind::NotFound {
        code::MISSING_FILE
    } else {
        code::BAD_INPUT
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        Self::invalid(e.to_string())
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        let code = match &e {
            NnError::Io { source, .. } => io_code(source),
            NnError::Format(_) => code::BAD_INPUT,
            _ => code::INVALID_ARGUMENT,
        };
        Self::new(code, e.to_string())
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io { ref source, .. } => Self::new(io_code(source), e.to_string()),
            DataError::InvalidArgument(_) => Self::invalid(e.to_string()),
            DataError::Nn(inner) => inner.into(),
            DataError::Linalg(inner) => inner.into(),
            _ => Self::new(code::BAD_INPUT, e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(_) => Self::invalid(e.to_string()),
            TrainError::NonFinite { .. } => Self::new(code::TRAINING_FAILED, e.to_string()),
            TrainError::Nn(inner) => inner.into(),
            TrainError::Io { ref path, ref source } => Self::write(path, source),
        }
    }
}

impl From<BoundError> for CliError {
    fn from(e: BoundError) -> Self {
        match e {
            BoundError::Nn(inner) => inner.into(),
            other => Self::invalid(other.to_string()),
        }
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        match e {
            MeasureError::Nn(inner) => inner.into(),
            other => Self::invalid(other.to_string()),
        }
    }
}

impl From<LowerBoundError> for CliError {
    fn from(e: LowerBoundError) -> Self {
        match e {
            LowerBoundError::Nn(inner) => inner.into(),
            LowerBoundError::Data(inner) => inner.into(),
            other => Self::invalid(other.to_string()),
        }
    }
}
