use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use kyleback_cli::{exit_code, run, Cli, Status};

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("KYLEBACK_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("KYLEBACK_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let start = Instant::now();
    match run(cli) {
        Ok(mut report) => {
            report.wall_time = start.elapsed().as_secs_f64();
            for c in report.checks.iter().filter(|c| c.status != Status::Pass) {
                let tag = if c.status == Status::Fail { "FAIL" } else { "warn" };
                eprintln!("{tag} {}: measured {:e}, tolerance {:e}", c.name, c.measured, c.tolerance);
            }
            eprintln!(
                "{}: {} checks, {} outputs in {}, {:.2}s",
                report.scenario_name,
                report.checks.len(),
                report.outputs.len(),
                report.out_dir().display(),
                report.wall_time
            );
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
