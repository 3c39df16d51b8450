mod cli;
mod commands;
mod formats;

use clap::Parser;

use crate::cli::{Cli, Command};

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Check(args) => commands::cmd_check(args),
        Command::Estimate(args) => commands::cmd_estimate(args),
        Command::Infer(args) => commands::cmd_infer(args),
        Command::Synth(args) => commands::cmd_synth(args),
        Command::Eval(args) => commands::cmd_eval(args),
        Command::Sweep(args) => commands::cmd_sweep(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(&cli) {
        eprintln!("error: {err:#}");
        std::process::exit(commands::exit_code(&err));
    }
}
