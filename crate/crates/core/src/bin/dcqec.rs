use std::process::ExitCode;

fn main() -> ExitCode {
    dcqec::cli::main_with_args(std::env::args_os())
}
