//! `mra` binary: parse the command line and dispatch.

use clap::Parser;

fn main() -> anyhow::Result<()> {
    sparse_mra_cli::cli::run(sparse_mra_cli::cli::Cli::parse())
}
