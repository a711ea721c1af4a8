use std::process::ExitCode;

fn main() -> ExitCode {
    lexsent::cli::run(std::env::args_os())
}
