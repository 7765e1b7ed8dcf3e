use std::process::ExitCode;

fn main() -> ExitCode {
    chorda_cli::cli::run(std::env::args_os())
}
