use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mt_cli::commands::{cmd_eval, cmd_gen, cmd_mine, cmd_run, EvalArgs, GenArgs, MineArgs, RunArgs};
use mt_cli::server::{serve, ServeArgs};
use mt_cli::CliResult;

/// Metamorphic testing pipeline: generate data, run MRs, mine applicability
/// constraints and score mutants.
#[derive(Debug, Parser)]
#[command(name = "mt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a stratified test dataset.
    Gen(GenArgs),
    /// Execute a campaign and write the trial log.
    Run(RunArgs),
    /// Mine applicability constraints from a trial log.
    Mine(MineArgs),
    /// Score mutants with and without the mined constraints.
    Eval(EvalArgs),
    /// Serve the explorer HTTP API.
    Serve(ServeArgs),
}

fn dispatch(cmd: Command) -> CliResult<String> {
    match cmd {
        Command::Gen(a) => cmd_gen(&a),
        Command::Run(a) => cmd_run(&a),
        Command::Mine(a) => cmd_mine(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Serve(a) => serve(&a).map(|()| String::new()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { mt_cli::EXIT_INVALID } else { mt_cli::EXIT_OK });
        }
    };
    match dispatch(cli.command) {
        Ok(msg) => {
            if !msg.is_empty() {
                eprintln!("{msg}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
