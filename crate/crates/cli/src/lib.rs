//! Command-line front end for training, certification, cardinality
//! analytics, attacks and the coverage calculator.
//!
//! [`run`] takes the arguments and output streams explicitly so tests can
//! drive every subcommand in-process.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use commands::Cli;

/// Bad flags or configuration values.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_GUARD: i32 = 4;

/// Exit status for an error: 2 usage, 3 data, 4 scale guard, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<editcert::Error>() {
            return if e.is_guard() {
                EXIT_GUARD
            } else if e.is_data() {
                EXIT_DATA
            } else if matches!(e, editcert::Error::InvalidArgument(_) | editcert::Error::SchemeMismatch) {
                EXIT_USAGE
            } else {
                EXIT_FAILURE
            };
        }
    }
    EXIT_FAILURE
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match commands::dispatch(cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            exit_code(&e)
        }
    }
}
