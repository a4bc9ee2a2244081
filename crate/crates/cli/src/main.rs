use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gdms_cli::{run, RunOptions, Verb};

/// Pressure, dimension and multifractal spectra of conformal iterated
/// function systems on the line.
#[derive(Debug, Parser)]
#[command(name = "gdms", version)]
struct Cli {
    #[arg(value_enum)]
    verb: Verb,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for CSV and JSON artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads; overrides `numerics.workers`.
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides `numerics.seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(1);
        }
    };
    let opts = RunOptions { out: cli.out, workers: cli.workers, seed: cli.seed, verbose: cli.verbose };
    match run(cli.verb, &text, &opts) {
        Ok(outcome) => {
            // A closed pipe downstream is not a failure of the run.
            let mut out = std::io::stdout().lock();
            for line in &outcome.summary {
                let _ = writeln!(out, "{line}");
            }
            for f in &outcome.files {
                let _ = writeln!(out, "wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
