use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ftc::overrides::Override;
use ftc::runner::{self, exit};
use ftc::{presets, LoadError};

/// Fault-tolerant trajectory tracking simulator.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Output directory for CSV and summary files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override a scenario setting, e.g. `T_s=4` or `vehicle.u_max=5`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<Override>,
    /// Write every N-th step to the CSV.
    #[arg(long, value_name = "N")]
    decimation: Option<usize>,
}

impl RunArgs {
    fn all_overrides(&self) -> Vec<Override> {
        let mut o = self.overrides.clone();
        if let Some(n) = self.decimation {
            o.push(
                format!("simulation.decimation={n}")
                    .parse()
                    .expect("well-formed"),
            );
        }
        o
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file or preset.
    Run {
        scenario: String,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Run several scenarios in parallel and print a summary table.
    Batch {
        scenarios: Vec<String>,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Check scenario files without running them.
    Validate {
        scenarios: Vec<String>,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<Override>,
    },
    /// List the shipped presets.
    ListPresets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { scenario, args } => {
            let outcome = runner::run(&scenario, &args.all_overrides(), &args.out);
            match (&outcome.summary, &outcome.message) {
                (Some(_), _) => {
                    for path in &outcome.artifacts {
                        println!("wrote {}", path.display());
                    }
                    if let Some(m) = &outcome.message {
                        eprintln!("error: {m}");
                    }
                }
                (None, Some(m)) => eprintln!("{m}"),
                (None, None) => {}
            }
            if let Some(s) = &outcome.summary {
                if s.reconfiguration_failed {
                    eprintln!(
                        "warning: reconfiguration did not re-converge for at least one fault"
                    );
                }
            }
            outcome.status.exit_code()
        }
        Command::Batch { scenarios, args } => {
            let outcomes = runner::batch(&scenarios, &args.all_overrides(), &args.out);
            let table = runner::batch_table(&outcomes);
            print!("{table}");
            match std::fs::create_dir_all(&args.out)
                .and_then(|_| std::fs::write(args.out.join("batch_summary.csv"), &table))
            {
                Ok(()) => runner::batch_exit_code(&outcomes),
                Err(e) => {
                    eprintln!("{}: {e}", args.out.display());
                    exit::IO
                }
            }
        }
        Command::Validate {
            scenarios,
            overrides,
        } => {
            let mut code = exit::OK;
            for s in &scenarios {
                match runner::load(s, &overrides) {
                    Ok(l) => println!(
                        "{s}: ok ({}, {} steps)",
                        l.scenario.name,
                        l.scenario.step_count()
                    ),
                    Err(e) => {
                        eprintln!("{e}");
                        let c = if matches!(e, LoadError::Io(..)) {
                            exit::IO
                        } else {
                            exit::VALIDATION
                        };
                        if code == exit::OK {
                            code = c;
                        }
                    }
                }
            }
            code
        }
        Command::ListPresets => {
            for p in presets::PRESETS {
                println!("{:<24} {}", p.name, p.description());
            }
            exit::OK
        }
    };
    ExitCode::from(code as u8)
}
