//! `histories`: run scenario files, search for violations, emit the
//! interferometer scenario.
//!
//! Exit status: 0 clean, 1 flagged, 2 input error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use histories::bayes::Assignment;
use histories::decoherence::ConsistencyMode;
use histories::mzi::{mzi_scenario, MziConfig};
use histories::report::{render_text, run_scenario, RunOptions};
use histories::scenario::{ScenarioFile, SearchKind};
use histories::search::{search_violations, DEFAULT_BUDGET};

#[derive(Parser)]
#[command(
    name = "histories",
    version,
    about = "Consistency and Bayesian audits of quantum history sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Output {
    Text,
    Machine,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Strong,
    Medium,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Source {
    Auto,
    Decoherence,
    LinearPositive,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Kind {
    NonLp,
    NonQuasi,
    OrderViolation,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analyses of a scenario file.
    Run {
        file: PathBuf,
        /// Numerical tolerance (overrides the file).
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long)]
        seed: Option<u64>,
        /// Trial budget for search analyses.
        #[arg(long)]
        budget: Option<usize>,
        /// Probability assignment used by audits.
        #[arg(long, value_enum)]
        assignment: Option<Source>,
        #[arg(long, value_enum, default_value = "text")]
        output: Output,
    },
    /// Search random models for a violation and emit a reproduction file.
    Search {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the reproduction scenario.
        #[arg(long)]
        write: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        output: Output,
    },
    /// Print the Mach-Zehnder scenario file.
    Mzi {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        phase: f64,
        #[arg(long)]
        path_detection: bool,
    },
}

fn input_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            file,
            tolerance,
            mode,
            seed,
            budget,
            assignment,
            output,
        } => {
            let text = match fs::read_to_string(&file) {
                Ok(t) => t,
                Err(e) => return input_error(format!("{}: {e}", file.display())),
            };
            let scenario = match ScenarioFile::from_json(&text) {
                Ok(s) => s,
                Err(e) => return input_error(format!("{}: {e}", file.display())),
            };
            let options = RunOptions {
                tolerance,
                mode: mode.map(|m| match m {
                    Mode::Strong => ConsistencyMode::Strong,
                    Mode::Medium => ConsistencyMode::Medium,
                }),
                seed,
                budget,
                assignment: assignment.map(|a| match a {
                    Source::Auto => Assignment::Auto,
                    Source::Decoherence => Assignment::Decoherence,
                    Source::LinearPositive => Assignment::LinearPositive,
                }),
            };
            if budget == Some(0) {
                return input_error("--budget must be at least 1");
            }
            let report = match run_scenario(&scenario, &options) {
                Ok(r) => r,
                Err(e) => return input_error(format!("{}: {e}", file.display())),
            };
            match output {
                Output::Text => print!("{}", render_text(&report)),
                Output::Machine => print!("{}", report.to_machine()),
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Command::Search {
            kind,
            budget,
            seed,
            write,
            output,
        } => {
            let kind = match kind {
                Kind::NonLp => SearchKind::NonLp,
                Kind::NonQuasi => SearchKind::NonQuasi,
                Kind::OrderViolation => SearchKind::OrderViolation,
            };
            let witness = match search_violations(kind, budget, seed) {
                Ok(w) => w,
                Err(e) => return input_error(e),
            };
            if let (Some(path), Some(w)) = (&write, &witness) {
                if let Err(e) = fs::write(path, w.scenario.to_json()) {
                    return input_error(format!("{}: {e}", path.display()));
                }
            }
            match output {
                Output::Machine => {
                    let doc =
                        histories::search::SearchOutcome::new(kind, budget, seed, witness.clone());
                    print!("{}", doc.to_machine());
                }
                Output::Text => match &witness {
                    Some(w) => {
                        println!(
                            "{kind} witness: dimension {}, {} times, trial {} (instance seed {}), histories {:?}, measure {:.6e}",
                            w.dimension, w.times, w.trial, w.instance_seed, w.histories, w.measure
                        );
                        if let Some(p) = &write {
                            println!("reproduction written to {}", p.display());
                        }
                    }
                    None => println!("{kind}: no witness within {budget} trials"),
                },
            }
            ExitCode::from(u8::from(witness.is_some()))
        }
        Command::Mzi {
            phase,
            path_detection,
        } => match mzi_scenario(MziConfig {
            phase,
            path_detection,
        }) {
            Ok(f) => {
                print!("{}", f.to_json());
                ExitCode::SUCCESS
            }
            Err(e) => input_error(e),
        },
    }
}
