use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use ls2d::cli::{run, Mode, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "ls2d", version, about = "2D Lippmann-Schwinger solvers")]
struct Args {
    /// One of direct, pgmres, compress-stats, quad-test, spectrum.
    mode: Mode,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the report and any exported files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread cap; overrides `threads` in the config.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match execute(&args) {
        Ok(converged) if converged => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            eprintln!("ls2d: {e}");
            ExitCode::from(1)
        }
    }
}

fn execute(args: &Args) -> ls2d::Result<bool> {
    let cfg = RunConfig::from_file(&args.config)?;
    let mode = cfg.resolve_mode(Some(args.mode))?;
    if let Some(threads) = args.threads.or(cfg.threads) {
        if threads == 0 {
            return Err(ls2d::Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| ls2d::Error::Config(format!("thread pool: {e}")))?;
    }
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
    }
    let report = run(&cfg, mode, args.out.as_deref())?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| ls2d::Error::Format(e.to_string()))?;
    println!("{json}");
    Ok(report.converged != Some(false))
}
