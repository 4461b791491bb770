//! Command-line front end: argument parsing, config merging and the
//! subcommand implementations behind the `skinloc` binary.

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

pub use commands::{
    cmd_fit, cmd_localize, cmd_simulate, cmd_snr, cmd_sweep_count, cmd_sweep_eta_res, execute, Acquisition,
    LocalizeOutcome,
};
pub use config::{
    AcquisitionArgs, Cli, Command, CommonArgs, FitArgs, LocalizeArgs, ModelArgs, SimulateArgs, SnrArgs,
    SweepCountArgs, SweepEtaResArgs,
};
pub use error::{CliError, EXIT_INVALID, EXIT_RUNTIME};

/// Parses `args`, runs the command and reports on stdout and stderr.
/// Returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("{}", CliError::invalid("invalid_arguments", first).to_json_line());
            return EXIT_INVALID;
        }
    };
    match execute(&cli.command) {
        Ok((summary, warnings)) => {
            for w in warnings {
                eprintln!("{}", serde_json::json!({ "warning": w }));
            }
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            e.code
        }
    }
}
