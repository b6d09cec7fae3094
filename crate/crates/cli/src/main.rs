mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// A failed run. Usage covers bad flags, unreadable or malformed input and
/// shape problems (exit 2); Engine covers failures inside the perturbation
/// itself (exit 3).
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Engine(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Engine(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Engine(m) => m,
        }
    }
}

impl From<seal::Error> for Failure {
    fn from(e: seal::Error) -> Self {
        use seal::Error::*;
        match e {
            Singular { .. } | Window { .. } | BelowMinimum { .. } => Failure::Engine(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Perturb(a) => commands::perturb(a),
        Command::Stream(a) => commands::stream(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Bench(a) => commands::bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("seal: error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
