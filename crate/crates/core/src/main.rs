use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use jointweak::cli::commands::{output_path, run, CommandOutput, Invocation};
use jointweak::cli::config::CommandName;
use jointweak::cli::{parse_config, CliError, RunConfig};

/// Joint weak measurements of commuting observables at any coupling strength.
#[derive(Parser, Debug)]
#[command(name = "jointweak", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Skip the grid oracle.
    #[arg(long, global = true)]
    fast: bool,

    /// Grid oracle resolution per axis (power of two, at least 256).
    #[arg(long, global = true)]
    grid_n: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Weak values of A, B and AB for the configured scenario.
    Weakvalue,
    /// Post-selected pointer moments at one coupling, from every engine.
    Moments,
    /// Pointer moments over a coupling range, as CSV.
    Sweep,
    /// Hardy joint weak probabilities over a coupling range, as CSV.
    Hardy,
    /// Cross-engine verification suite.
    Verify,
}

impl From<Command> for CommandName {
    fn from(c: Command) -> Self {
        match c {
            Command::Weakvalue => CommandName::Weakvalue,
            Command::Moments => CommandName::Moments,
            Command::Sweep => CommandName::Sweep,
            Command::Hardy => CommandName::Hardy,
            Command::Verify => CommandName::Verify,
        }
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig, CliError> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.clone(), message: e.to_string() })?;
    Ok(parse_config(&text)?)
}

fn emit(out: &CommandOutput, path: Option<PathBuf>, summary_to_stdout: bool) -> Result<(), CliError> {
    match path {
        Some(p) => {
            std::fs::write(&p, &out.body).map_err(|e| CliError::Io { path: p.clone(), message: e.to_string() })?;
            for line in &out.log {
                if summary_to_stdout {
                    println!("{line}");
                } else {
                    eprintln!("{line}");
                }
            }
        }
        None => {
            print!("{}", out.body);
            for line in &out.log {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    let command = CommandName::from(cli.command);
    let inv = Invocation { config: load_config(cli.config.as_ref())?, out: cli.out, fast: cli.fast, grid_n: cli.grid_n };
    let out = run(command.clone(), &inv)?;
    emit(&out, output_path(&inv), command == CommandName::Verify)?;
    match out.failure {
        Some(msg) => Err(CliError::VerifyFailed(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::FAILURE
        }
    }
}
