use std::panic;
use std::process::ExitCode;

use unimatch::cli;

fn main() -> ExitCode {
    let code = panic::catch_unwind(|| cli::run(std::env::args_os())).unwrap_or(cli::EXIT_INTERNAL);
    ExitCode::from(code as u8)
}
