use std::process::ExitCode;

use cx_core::cli::{run, EXIT_USAGE};

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("CX_THREADS") {
        match v.parse::<usize>() {
            Ok(threads) if threads > 0 => {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global()
                    .expect("global thread pool is configured once");
            }
            _ => {
                eprintln!("error: CX_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(EXIT_USAGE as u8);
            }
        }
    }
    ExitCode::from(run(std::env::args_os()) as u8)
}
