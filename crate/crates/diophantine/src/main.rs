use std::process::ExitCode;

fn main() -> ExitCode {
    diophantine::cli::run()
}
