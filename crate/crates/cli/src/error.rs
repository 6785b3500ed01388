use std::fmt;
use std::path::Path;

use gaitxai::data::DataError;
use gaitxai::eval::EvalError;
use gaitxai::lrp::LrpError;
use gaitxai::nn::NnError;
use gaitxai::spm::SpmError;

/// Process exit status of a failed run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Unexpected = 1,
    InputMissing = 2,
    Precondition = 3,
    ConfigParse = 4,
}

/// A failure with a machine-readable class, printed as one `error[Class]: message` line.
#[derive(Clone, Debug, PartialEq)]
pub struct CliError {
    pub class: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(class: &'static str, message: impl Into<String>) -> Self {
        CliError { class, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        CliError::new("ConfigError", message)
    }

    pub fn missing_input(path: &Path) -> Self {
        CliError::new("MissingInput", format!("{} not found; run the producing subcommand first", path.display()))
    }

    pub fn checkpoint(message: impl Into<String>) -> Self {
        CliError::new("CheckpointMismatch", message)
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::new("IoError", format!("{}: {e}", path.display()))
    }

    pub fn status(&self) -> ExitStatus {
        match self.class {
            "DataNotFound" | "MissingInput" => ExitStatus::InputMissing,
            "ConfigError" | "BadFlag" | "InvalidGraph" | "RegionError" => ExitStatus::ConfigParse,
            "IoError" | "SubjectLeak" | "Unexpected" => ExitStatus::Unexpected,
            _ => ExitStatus::Precondition,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let message = self.message.replace('\n', " ");
        write!(f, "error[{}]: {}", self.class, message.trim())
    }
}

impl std::error::Error for CliError {}

macro_rules! from_classified {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::new(e.class(), e.to_string())
            }
        }
    )*};
}

from_classified!(DataError, NnError, LrpError, SpmError, EvalError);

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classes_map_to_exit_statuses() {
        assert_eq!(CliError::new("DataNotFound", "x").status(), ExitStatus::InputMissing);
        assert_eq!(CliError::new("TooFewSubjects", "x").status(), ExitStatus::Precondition);
        assert_eq!(CliError::new("CheckpointMismatch", "x").status(), ExitStatus::Precondition);
        assert_eq!(CliError::config("x").status(), ExitStatus::ConfigParse);
        assert_eq!(CliError::new("IoError", "x").status(), ExitStatus::Unexpected);
    }

    #[test]
    fn display_is_one_line() {
        let e = CliError::new("BadFlag", "first\nsecond");
        assert_eq!(e.to_string(), "error[BadFlag]: first second");
    }
}
