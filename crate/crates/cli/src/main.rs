//! `gapforge`: spectral gaps, design depths and self-checks from the command line.
// `!(x > 0.0)` is meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod depth;
mod gap;
mod parse;
mod verify;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gapforge", version, about = "Spectral gaps of brickwork random circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute spectral gaps over a parameter sweep.
    Gap(gap::GapArgs),
    /// Depth bounds for approximate 2-designs and gate-count comparisons.
    Depth(depth::DepthArgs),
    /// Run structural and statistical self-checks.
    Verify(verify::VerifyArgs),
}

/// Exit status for invalid arguments.
pub const EXIT_USAGE: u8 = 2;

fn init_threads() {
    if let Some(n) = std::env::var("GAPFORGE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // ignore failure: the pool can only be configured once
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let code = match cli.command {
        Command::Gap(a) => gap::run(a),
        Command::Depth(a) => depth::run(a),
        Command::Verify(a) => verify::run(a),
    };
    ExitCode::from(code)
}
