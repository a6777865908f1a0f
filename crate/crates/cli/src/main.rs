use std::process::ExitCode;

fn main() -> ExitCode {
    shoreline_cli::main_with(std::env::args_os())
}
