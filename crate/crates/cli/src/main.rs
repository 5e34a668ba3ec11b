use std::path::PathBuf;
use std::process::ExitCode;

use axisym_cli::{run_and_write, validate_config, Invalid, ScenarioConfig, REFERENCE_CONFIG};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "axisym",
    about = "Simulator and verification harness for an axisymmetric inviscid Euler model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its CSV and summary JSON.
    Run { config: PathBuf },
    /// Check a config against the scenario's preconditions.
    Validate { config: PathBuf },
    /// Print the commented reference config.
    ReferenceConfig,
    /// Print the version.
    Version,
}

fn print_violations(v: &[axisym_cli::Violation]) {
    let json = serde_json::json!({ "valid": false, "violations": v });
    println!("{}", serde_json::to_string_pretty(&json).expect("violations serialize"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ReferenceConfig => {
            print!("{REFERENCE_CONFIG}");
            ExitCode::SUCCESS
        }
        Command::Version => {
            println!("axisym {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
        Command::Validate { config } => {
            let cfg = match ScenarioConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(2);
                }
            };
            let violations = validate_config(&cfg);
            if violations.is_empty() {
                println!("{}", serde_json::json!({ "valid": true, "violations": [] }));
                ExitCode::SUCCESS
            } else {
                print_violations(&violations);
                ExitCode::from(1)
            }
        }
        Command::Run { config } => {
            let cfg = match ScenarioConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(2);
                }
            };
            match run_and_write(&cfg) {
                Ok(out) => {
                    let s = &out.summary;
                    for v in &s.verdicts {
                        let status = serde_json::to_value(v.status).expect("status serializes");
                        println!("{:<44} {}", v.name, status.as_str().unwrap_or("?"));
                    }
                    println!("csv: {}", cfg.output.csv.display());
                    println!("summary: {}", cfg.output.summary.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    if let Some(inv) = e.downcast_ref::<Invalid>() {
                        print_violations(&inv.0);
                        ExitCode::from(1)
                    } else {
                        eprintln!("error: {e:#}");
                        ExitCode::from(2)
                    }
                }
            }
        }
    }
}
