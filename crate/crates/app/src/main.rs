use std::process::ExitCode;

fn main() -> ExitCode {
    scalecal::cli::run(std::env::args_os())
}
