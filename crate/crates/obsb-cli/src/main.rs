//! Scenario-driven command line for the obsb library.
//!
//! `obsb run <scenario.toml>` executes the analyses listed in a scenario and
//! writes a JSON report bundle plus CSV traces. `obsb gallery` lists the
//! built-in families with their expected verdicts. `obsb properties` runs the
//! randomized invariant suites.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use obsb_cli::runner::{self, RunOptions};

#[derive(Parser)]
#[command(
    name = "obsb",
    version,
    about = "ordered-Banach-space Markov chain analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario file and write the report bundle and CSV traces
    Run {
        /// Path to the scenario TOML file
        scenario: PathBuf,
        /// Output directory (overrides the scenario's output block)
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Evaluation budget for coefficient computations
        #[arg(long)]
        budget: Option<usize>,
        /// Threshold override as key=value; repeatable
        #[arg(long = "tol", value_name = "KEY=VALUE")]
        tol: Vec<String>,
    },
    /// List the built-in chain families and their expected verdicts
    Gallery,
    /// Run the randomized invariant suites; nonzero exit on any violation
    Properties {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        trials: usize,
    },
}

/// Writes a stdout line, exiting quietly when the reader closed the pipe.
fn say(line: impl AsRef<str>) {
    let mut out = std::io::stdout().lock();
    if writeln!(out, "{}", line.as_ref()).is_err() {
        std::process::exit(0);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            out_dir,
            budget,
            tol,
        } => {
            let mut tol_overrides = Vec::new();
            for entry in &tol {
                match entry.split_once('=') {
                    Some((key, value)) => tol_overrides.push((key.to_string(), value.to_string())),
                    None => {
                        eprintln!("input error: --tol expects key=value, got '{entry}'");
                        return ExitCode::from(2);
                    }
                }
            }
            let options = RunOptions {
                out_dir,
                budget,
                tol_overrides,
            };
            match runner::run(&scenario, &options) {
                Ok(summary) => {
                    say(format!("report: {}", summary.report_path.display()));
                    for path in &summary.csv_paths {
                        say(format!("trace:  {}", path.display()));
                    }
                    for (notion, verdict) in &summary.verdicts {
                        say(format!("{notion}: {verdict:?}"));
                    }
                    ExitCode::SUCCESS
                }
                Err(failure) => {
                    eprintln!("{failure}");
                    ExitCode::from(failure.exit_code())
                }
            }
        }
        Command::Gallery => {
            say("family | notion: expected | notes");
            say("-------+------------------+------");
            for row in obsb::gallery::gallery_expectations() {
                for (notion, verdict) in [
                    ("uniform", row.uniform),
                    ("weak", row.weak),
                    ("l_weak", row.l_weak),
                ] {
                    if verdict != "n/a" {
                        say(format!(
                            "{} | {}: {} | {}",
                            row.name, notion, verdict, row.notes
                        ));
                    }
                }
            }
            ExitCode::SUCCESS
        }
        Command::Properties { seed, trials } => match obsb::props::run_all(seed, trials) {
            Ok(outcomes) => {
                let mut failed = false;
                for outcome in &outcomes {
                    say(format!(
                        "suite {}: {} checks, {} violations",
                        outcome.suite,
                        outcome.checks,
                        outcome.violations.len()
                    ));
                    for note in &outcome.notes {
                        say(format!("  note: {note}"));
                    }
                    for violation in &outcome.violations {
                        failed = true;
                        say(format!(
                            "  violation (seed {}): {}",
                            violation.seed, violation.message
                        ));
                    }
                }
                if failed {
                    eprintln!("property violations found; rerun with the echoed seed");
                    ExitCode::from(1)
                } else {
                    ExitCode::SUCCESS
                }
            }
            Err(e) => {
                eprintln!("input error: {e}");
                ExitCode::from(2)
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
