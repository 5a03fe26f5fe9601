//! Configuration-driven experiment runner behind the `tdiss` binary.

mod config;
mod output;
mod runner;
mod selftest;

pub use config::{EngineChoice, ExperimentConfig, MapSpec, Observable};
pub use output::{float, Table, TOOL, VERSION};
pub use runner::{run, Command, Experiment, RunOptions, RunOutcome};
pub use selftest::{selftest, Check};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical { .. } | Error::Certification(_) => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

/// Exit code for a finished run: bound violations outrank success.
pub fn status(result: &crate::Result<RunOutcome>) -> i32 {
    match result {
        Ok(o) if o.violations.is_empty() => EXIT_OK,
        Ok(_) => EXIT_VIOLATION,
        Err(e) => exit_code(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(status(&Ok(RunOutcome::default())), 0);
        let bad = RunOutcome {
            violations: vec!["eps = 1e-2: tau* = 3 outside [4, 9]".into()],
            ..Default::default()
        };
        assert_eq!(status(&Ok(bad)), 4);
        assert_eq!(status(&Err(Error::config("run.eta", "x"))), 2);
        assert_eq!(status(&Err(Error::Serde("x".into()))), 2);
        assert_eq!(status(&Err(Error::Certification("x".into()))), 3);
        assert_eq!(status(&Err(Error::Numerical { message: "x".into(), estimate: 0.0 })), 3);
    }
}
