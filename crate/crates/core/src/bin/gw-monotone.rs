use std::io::Write;
use std::process::ExitCode;

use gw_monotone::cli::{self, EXIT_ERROR};

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("GW_MONOTONE_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: GW_MONOTONE_THREADS must be a positive integer, got `{threads}`");
                return ExitCode::from(EXIT_ERROR as u8);
            }
        }
    }

    let cmd = match cli::parse_args(std::env::args_os()) {
        Ok(cmd) => cmd,
        Err(e) => e.exit(),
    };
    match cli::run(&cmd) {
        Ok(outcome) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(outcome.output.as_bytes());
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
