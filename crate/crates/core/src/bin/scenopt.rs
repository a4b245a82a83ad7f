use std::io::{self, Write};
use std::process::ExitCode;

fn main() -> ExitCode {
    let mut stdout = io::stdout();
    let result = scenopt::cli::run(std::env::args_os(), &mut stdout);
    let _ = stdout.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("scenopt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
