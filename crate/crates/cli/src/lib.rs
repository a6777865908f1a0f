//! Command-line front end: parses a run configuration, executes single runs
//! or resolution sweeps and writes CSV snapshots plus JSON summaries.

pub mod args;
pub mod error;
pub mod output;
pub mod run;
pub mod sweep;

use std::process::ExitCode;

pub use args::{parse_args, RunConfig};
pub use error::CliError;
pub use run::{run_single, RunRecord};
pub use sweep::{run_sweep, SweepReport};

/// Runs the tool for `argv` and reports
/// 0 on success, 1 on usage errors, 2 on numerical failure and 3 on I/O errors.
pub fn main_with<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match execute(argv) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(CliError::Help(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(msg)) => {
            eprint!("{msg}");
            if !msg.ends_with('\n') {
                eprintln!();
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute<I, T>(argv: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = parse_args(argv)?;
    if cfg.sweep {
        let report = run_sweep(&cfg)?;
        let dir = sweep::sweep_dir(&cfg);
        if report.any_failed() {
            return Err(CliError::Numerical(format!(
                "some sweep runs failed, see {}",
                dir.join("sweep.json").display()
            )));
        }
        Ok(format!("sweep written to {}", dir.display()))
    } else {
        let rec = run_single(&cfg)?;
        match rec.failure {
            Some(f) => Err(CliError::Numerical(format!(
                "t = {} cell {:?}: {} (summary in {})",
                f.time,
                f.cell,
                f.reason,
                rec.run_dir.display()
            ))),
            None => Ok(format!("run written to {}", rec.run_dir.display())),
        }
    }
}
