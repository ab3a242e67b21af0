//! Command-line front end: filtering, cross-architecture comparison, design
//! space exploration, noise injection and PSNR.
//!
//! Exit status is 0 on success, 1 for usage, I/O and validation errors and
//! 2 when a pipeline output differs from the reference convolution.

pub mod args;
pub mod commands;
pub mod kernel_spec;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;
use thiserror::Error;

use convsim_core::{ArchError, ArchKind, ImageError, KernelError, PgmError};

pub use args::Cli;
pub use report::{RunReport, SCHEMA};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Pgm { path: PathBuf, source: PgmError },
    #[error("{}: {reason}", path.display())]
    KernelFile { path: PathBuf, reason: String },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("{kind} output differs from the reference at row {row}, column {col}")]
    Mismatch {
        kind: ArchKind,
        row: usize,
        col: usize,
    },
    #[error("cannot write report: {0}")]
    Report(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Mismatch { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// status. Diagnostics go to `err`, reports and values to `out`.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return 1;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    let echo: Vec<String> = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match commands::dispatch(cli, echo, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mismatch_exits_2_and_names_the_pixel() {
        let e = CliError::Mismatch {
            kind: ArchKind::SeparableRowCol,
            row: 4,
            col: 17,
        };
        assert_eq!(e.exit_code(), 2);
        assert_eq!(
            e.to_string(),
            "separable-row-col output differs from the reference at row 4, column 17"
        );
        assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
        assert_eq!(CliError::Kernel(KernelError::NotSeparable).exit_code(), 1);
    }

    #[test]
    fn run_reports_parse_errors_with_status_1() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["convsim", "bogus"], &mut out, &mut err), 1);
        assert!(!err.is_empty());
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["convsim", "--version"], &mut out, &mut err), 0);
        assert!(String::from_utf8(out).unwrap().starts_with("convsim"));
    }

    #[test]
    fn explore_writes_a_report_to_the_sink() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let argv = [
            "convsim", "explore", "--width", "64", "--height", "64", "--size", "3",
        ];
        assert_eq!(
            run(argv, &mut out, &mut err),
            0,
            "{}",
            String::from_utf8_lossy(&err)
        );
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains(SCHEMA));
        assert!(text.contains("\"ranking\""));
    }
}
