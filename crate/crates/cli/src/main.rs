use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spectrax_cli::commands::{
    cmd_distvar, cmd_maxcut, cmd_solve, cmd_spectratope, cmd_tensor, DistvarArgs, MaxcutArgs, SolveArgs,
    SpectratopeArgs, TensorArgs,
};

/// Spectral relaxation bounds for polynomial optimization over varieties.
///
/// Set SPECTRAX_THREADS to limit the worker threads.
#[derive(Debug, Parser)]
#[command(name = "spectrax", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a problem file level by level.
    Solve(SolveArgs),
    /// Max-cut upper bounds for a graph.
    Maxcut(MaxcutArgs),
    /// Lower bounds on the distance from query points to a variety.
    Distvar(DistvarArgs),
    /// Upper bounds on the spectral norm of an order-3 tensor.
    Tensor(TensorArgs),
    /// Boundary of projected spectratopes, one polygon per level.
    Spectratope(SpectratopeArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("SPECTRAX_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: SPECTRAX_THREADS ignored: {e}");
        }
    }
    let res = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Maxcut(a) => cmd_maxcut(a),
        Command::Distvar(a) => cmd_distvar(a),
        Command::Tensor(a) => cmd_tensor(a),
        Command::Spectratope(a) => cmd_spectratope(a),
    };
    match res {
        Ok(exit) => ExitCode::from(exit.code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
