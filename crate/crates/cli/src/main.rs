use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use quantnorm_cli::{run, validate, Overrides};

#[derive(Parser)]
#[command(
    name = "quantnorm",
    version,
    about = "Run norm-quantization experiments from JSON configs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory (overrides `output.dir`)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed recorded in the manifest (overrides `params.seed`)
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Grid nodes per axis (overrides `params.grid`)
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u64).range(2..))]
    grid: Option<u64>,
    /// Worker threads
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write CSV results plus a JSON manifest
    Run { config: PathBuf },
    /// Check a config without computing anything
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => {
            let v = validate(&config);
            if v.is_empty() {
                println!("ok");
                ExitCode::SUCCESS
            } else {
                for s in &v {
                    println!("{s}");
                }
                ExitCode::from(2)
            }
        }
        Command::Run { config } => {
            let ov = Overrides {
                out: cli.out,
                seed: cli.seed,
                grid: cli.grid.map(|n| n as usize),
                threads: cli.threads.map(|n| n as usize),
            };
            match run(&config, &ov) {
                Ok(o) => {
                    println!("{}", o.manifest_path.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprint!("error: {e}");
                    if !matches!(e, quantnorm_cli::RunError::Validation(_)) {
                        eprintln!();
                    }
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
