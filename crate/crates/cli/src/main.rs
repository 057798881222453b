use clap::Parser;
use mpss_cli::{run, Args};
use std::process::ExitCode;

fn main() -> ExitCode {
    let args = Args::parse();
    let level = std::env::var("MPSS_LOG").unwrap_or_else(|_| "warn".into());
    if !["error", "warn", "info", "debug"].contains(&level.as_str()) {
        eprintln!("MPSS_LOG must be one of error, warn, info, debug; got '{level}'");
        return ExitCode::from(3);
    }
    env_logger::Builder::new().parse_filters(&level).format_timestamp(None).init();
    match run(&args) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
