//! `rtc`: build corpora, run round trips, and report on the records.
//!
//! Exit status is 0 on success, 1 when some task failed or a run could not
//! complete, and 2 on configuration errors. Logs go to stderr; data only to
//! the files named on the command line.

mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, RunCommand};

/// Why a subcommand stopped.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, unreadable inputs, invalid configuration.
    Config(anyhow::Error),
    /// Infrastructure failure after the configuration was accepted.
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn config(e: impl Into<anyhow::Error>) -> Self {
        Failure::Config(e.into())
    }

    pub fn runtime(e: impl Into<anyhow::Error>) -> Self {
        Failure::Runtime(e.into())
    }
}

/// Outcome of a subcommand that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Clean,
    TaskFailures,
}

pub type CmdResult = Result<Status, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::BuildCorpus(a) => commands::build_corpus(&a),
        Command::Run(RunCommand::Synthesis(a)) => commands::run_synthesis(&a),
        Command::Run(RunCommand::Editing(a)) => commands::run_editing(&a),
        Command::Report(a) => commands::report(&a),
        Command::Correlate(a) => commands::correlate(&a),
        Command::StubServer(a) => commands::stub_server(&a),
    };
    match result {
        Ok(Status::Clean) => ExitCode::SUCCESS,
        Ok(Status::TaskFailures) => ExitCode::from(1),
        Err(Failure::Runtime(e)) => {
            log::error!("{e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            log::error!("{e:#}");
            ExitCode::from(2)
        }
    }
}
