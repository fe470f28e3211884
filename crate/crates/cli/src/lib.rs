//! Front end for `qctrl-core`. Commands print JSON reports on stdout and
//! write controls and trajectories as tidy CSV.

pub mod args;
pub mod commands;
pub mod io;

use std::fmt;

use qctrl_core::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_HYPOTHESIS: u8 = 2;
pub const EXIT_SYNTHESIS: u8 = 3;
pub const EXIT_IO: u8 = 4;

/// Environment variable overriding the gap tolerance.
pub const GAP_TOL_ENV: &str = "QCTRL_GAP_TOL";

/// A failure carrying its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub source: anyhow::Error,
}

impl CliError {
    pub fn hypothesis(e: impl Into<anyhow::Error>) -> Self {
        CliError { code: EXIT_HYPOTHESIS, source: e.into() }
    }

    pub fn synthesis(e: impl Into<anyhow::Error>) -> Self {
        CliError { code: EXIT_SYNTHESIS, source: e.into() }
    }

    pub fn io(e: impl Into<anyhow::Error>) -> Self {
        CliError { code: EXIT_IO, source: e.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.source)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NotConnected { .. }
            | Error::ChainNotConnected
            | Error::NotMConnected { .. }
            | Error::EdgeNotInChain { .. }
            | Error::DecoupledEdge { .. }
            | Error::ResonantGap { .. }
            | Error::ResonantTruncation { .. }
            | Error::DegenerateGaps { .. }
            | Error::PhaseCorrectionUndefined { .. }
            | Error::PhaseCorrectionNotReal { .. } => EXIT_HYPOTHESIS,
            Error::InvalidSpec(_) | Error::InvalidInput(_) | Error::DimensionMismatch { .. } => EXIT_IO,
            _ => EXIT_SYNTHESIS,
        };
        CliError { code, source: e.into() }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
