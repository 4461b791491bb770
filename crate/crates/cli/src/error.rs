use std::fmt;

use skinloc::io::IoError;

/// Exit status for invalid arguments, configuration or input files.
pub const EXIT_INVALID: i32 = 2;
/// Exit status for failures while computing or writing results.
pub const EXIT_RUNTIME: i32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn invalid(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            kind,
            message: message.into(),
        }
    }

    pub fn runtime(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            kind,
            message: message.into(),
        }
    }

    pub fn precondition(message: impl Into<String>) -> Self {
        Self::invalid("precondition", message)
    }

    /// Failure to read or parse an input file.
    pub fn input(err: IoError) -> Self {
        Self::invalid("invalid_input", err.to_string())
    }

    /// Failure to write an output file.
    pub fn output(err: IoError) -> Self {
        Self::runtime("io", err.to_string())
    }

    /// Single-line JSON rendering for standard error.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({
            "error": self.kind,
            "message": self.message.replace('\n', " "),
            "exit_code": self.code,
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_line_is_single_line_and_parseable() {
        let err = CliError::precondition("rows must be >= 2\n(got 1)");
        let line = err.to_json_line();
        assert!(!line.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["exit_code"], 2);
        assert_eq!(v["error"], "precondition");
    }

    #[test]
    fn runtime_errors_use_exit_one() {
        assert_eq!(CliError::runtime("io", "x").code, EXIT_RUNTIME);
    }
}
