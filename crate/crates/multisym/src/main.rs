use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(multisym::cli::run(std::env::args()) as u8)
}
