use std::process::ExitCode;

fn main() -> ExitCode {
    proxylabel::cli::main_with_args(std::env::args_os())
}
