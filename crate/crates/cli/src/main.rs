use std::process::ExitCode;

fn main() -> ExitCode {
    mzplan_cli::cli::main_with(std::env::args_os())
}
