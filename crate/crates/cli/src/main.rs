use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use vring::parallel::Execution;
use vring_cli::args::{Cli, Command, Common};
use vring_cli::commands::{
    cmd_chart, cmd_energy, cmd_freqresp, cmd_roots, cmd_simulate, default_out, exit_code,
};

fn execution(common: &Common) -> vring::Result<Execution> {
    match common.workers {
        Some(0) => Err(vring::Error::Config("--workers must be at least 1".into())),
        Some(1) => Ok(Execution::Sequential),
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| vring::Error::Config(e.to_string()))?;
            Ok(Execution::Parallel)
        }
        None => Ok(Execution::default()),
    }
}

fn run(cli: Cli) -> vring::Result<()> {
    let (name, common) = match &cli.command {
        Command::Scenario { name } => {
            let _ = writeln!(std::io::stdout(), "{}", name.scenario().to_canonical_json());
            return Ok(());
        }
        Command::Simulate(c) => ("simulate", c),
        Command::Energy(c) => ("energy", c),
        Command::Chart(c) => ("chart", c),
        Command::Roots(c) => ("roots", c),
        Command::Freqresp(c) => ("freqresp", c),
    };
    let mut scenario = common.load()?;
    let sweep = common.apply(name, &mut scenario)?;
    let exec = execution(common)?;
    let out = common.out.clone().unwrap_or_else(|| default_out(name));
    let summary = match cli.command {
        Command::Simulate(_) => serde_json::to_string(&cmd_simulate(&scenario, &out)?),
        Command::Energy(_) => {
            let outcome = cmd_energy(&scenario, sweep.as_deref(), &out, exec)?;
            serde_json::to_string(&serde_json::json!({
                "cells": outcome.grid.beta.len() * outcome.grid.beta_b.len(),
                "invalid": outcome.grid.invalid_cells(),
                "by_n": outcome.by_n,
            }))
        }
        Command::Chart(_) => serde_json::to_string(&cmd_chart(&scenario, &out, common.svg, exec)?),
        Command::Roots(_) => serde_json::to_string(&cmd_roots(&scenario, &out)?),
        Command::Freqresp(_) => serde_json::to_string(&cmd_freqresp(&scenario, &out)?),
        Command::Scenario { .. } => unreachable!(),
    };
    let _ = writeln!(
        std::io::stdout(),
        "{}",
        summary.expect("summaries serialize")
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
