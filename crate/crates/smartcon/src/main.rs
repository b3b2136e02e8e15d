use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(smartcon::cli::run(std::env::args()) as u8)
}
