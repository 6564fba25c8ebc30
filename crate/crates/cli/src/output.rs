use std::fmt;
use std::path::{Path, PathBuf};

use intramix_core::Error;
use serde::Serialize;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_TOLERANCE: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
    Tolerance(Vec<String>),
    Write { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) => match e {
                Error::InvalidConfig(_)
                | Error::InsufficientClass { .. }
                | Error::NoEligibleClass
                | Error::EmptyMask(_)
                | Error::EdgeOutOfRange { .. }
                | Error::NoValidPairs(_) => EXIT_USAGE,
                _ => EXIT_FAILURE,
            },
            CliError::Tolerance(_) => EXIT_TOLERANCE,
            CliError::Write { .. } => EXIT_FAILURE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Tolerance(items) => write!(f, "tolerance check failed: {}", items.join("; ")),
            CliError::Write { path, source } => write!(f, "cannot write {}: {source}", path.display()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

/// Pretty JSON with a trailing newline, to `out` or standard output. The
/// human summary goes to whichever stream the JSON does not use.
pub fn emit<T: Serialize>(report: &T, out: Option<&Path>, summary: &str) -> CliResult {
    let mut json = serde_json::to_string_pretty(report).expect("reports serialize");
    json.push('\n');
    match out {
        Some(path) => {
            std::fs::write(path, json).map_err(|source| CliError::Write { path: path.to_path_buf(), source })?;
            print!("{summary}");
        }
        None => {
            eprint!("{summary}");
            print!("{json}");
        }
    }
    Ok(())
}
