//! Command-line front end of the cofusion pipeline.

pub mod args;
pub mod commands;
pub mod config;
pub mod pipeline;

use cofusion::{Error, Result};

use args::{Cli, Command};

/// 2 for usage and configuration failures, 1 for everything else.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Usage(_) | Error::Config(_) => 2,
        _ => 1,
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Synth(a) => commands::synth(a, seed, out),
        Command::Splits(a) => commands::splits(a, seed, out),
        Command::Train(a) => commands::train(a, cli.seed, out),
        Command::Eval(a) => commands::eval(a, out),
        Command::Km(a) => commands::km(a, out),
    }
}
