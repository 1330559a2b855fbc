use std::io::{self, Write};
use std::process::ExitCode;

fn main() -> ExitCode {
    let stdin = io::stdin();
    let mut input = stdin.lock();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let code = nl2sql::cli::main_with(std::env::args(), &mut input, &mut out);
    let _ = out.flush();
    ExitCode::from(code)
}
