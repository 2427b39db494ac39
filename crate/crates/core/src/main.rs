use std::process::ExitCode;

fn main() -> ExitCode {
    segra::cli::main_with_args(std::env::args_os())
}
