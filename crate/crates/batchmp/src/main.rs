use std::process::ExitCode;

fn main() -> ExitCode {
    batchmp::cli::run()
}
