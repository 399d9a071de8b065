use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use rpfield_cli::output::write_outputs;
use rpfield_cli::{run, CliError, Command, OutputFormat, RunConfig, RunOptions};

/// Regularized reflection-positive field measures: estimators and verifiers.
#[derive(Debug, Parser)]
#[command(name = "rpfield", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Root seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the config's, else `rpfield-out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

fn main_inner(args: Args) -> Result<bool, CliError> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config {
                field: "--threads".into(),
                reason: e.to_string(),
            })?;
    }
    let config = RunConfig::load(&args.config)?;
    let out_dir = args
        .out
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("rpfield-out"));
    let format = args.format.unwrap_or(config.output.format);
    let opts = RunOptions {
        seed: args.seed,
        out_dir: out_dir.clone(),
    };
    let report = run(args.command, &config, &opts)?;
    for path in write_outputs(&report, &out_dir, format)? {
        eprintln!("wrote {}", path.display());
    }
    for v in &report.verdicts {
        eprintln!(
            "{} {}: statistic {:e}, threshold {:e}",
            if v.pass { "PASS" } else { "FAIL" },
            v.check,
            v.statistic,
            v.threshold
        );
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    match main_inner(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
