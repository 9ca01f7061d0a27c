use std::process::ExitCode;

use clap::Parser;
use fouberry_cli::{run, workers_from_env, Cli, CliError, RunConfig, EXIT_ASSERTION, EXIT_OK};

fn execute() -> Result<i32, CliError> {
    let config = RunConfig::from_cli(Cli::parse())?;
    if let Some(n) = workers_from_env()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {n} workers: {e}")))?;
    }
    let bundle = run(&config)?;
    let (json, csv) = bundle.write(&config.out_dir)?;
    for a in &bundle.assertions {
        println!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
    }
    println!("wrote {} and {}", json.display(), csv.display());
    eprintln!("wall time {:.3} s", bundle.wall_time.as_secs_f64());
    Ok(if bundle.passed() { EXIT_OK } else { EXIT_ASSERTION })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = match execute() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
