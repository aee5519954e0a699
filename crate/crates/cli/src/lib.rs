//! Command-line entry points and the curation HTTP service.

pub mod commands;
pub mod files;
pub mod server;

use std::ffi::OsString;
use std::panic::{catch_unwind, AssertUnwindSafe};

use clap::error::ErrorKind;
use clap::Parser;

pub use commands::{Cli, Command};
pub use files::ConfigHome;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

/// Exit status for a failed command: internal failures of the library map
/// to 2, everything else (bad files, bad flags, I/O) to 1.
pub fn exit_code(error: &anyhow::Error) -> i32 {
    let internal = error.chain().filter_map(|e| e.downcast_ref::<glycoannot::Error>()).any(|e| !e.is_input_error());
    if internal {
        EXIT_INTERNAL
    } else {
        EXIT_INPUT
    }
}

/// Parses `argv`, runs the command and returns the process exit status.
/// Diagnostics go to standard error.
pub fn run<I, A>(argv: I, home: &ConfigHome) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INPUT,
            };
        }
    };
    match catch_unwind(AssertUnwindSafe(|| commands::execute(cli, home))) {
        Ok(Ok(())) => EXIT_OK,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
        Err(_) => EXIT_INTERNAL,
    }
}
