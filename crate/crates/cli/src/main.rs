use clap::Parser;
use response_forecast_cli::commands::{run, Cli};

const THREADS_VAR: &str = "RESPONSE_FORECAST_THREADS";

fn main() {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n = match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => {
                eprintln!("error: {THREADS_VAR} must be a positive integer, got {v:?}");
                std::process::exit(2);
            }
        };
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            std::process::exit(1);
        }
    }
    if let Err(f) = run(&cli) {
        eprintln!("error: {:#}", f.error());
        std::process::exit(f.exit_code());
    }
}
