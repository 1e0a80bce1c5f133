use std::process::ExitCode;

fn main() -> ExitCode {
    confine::cli::main_with(std::env::args_os())
}
