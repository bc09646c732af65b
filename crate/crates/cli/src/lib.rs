//! Command-line toolkit over the sparse alignment library: data
//! generation, invariant-feature estimation, the four recovery solvers,
//! orbit scoring, and the resumable benchmark sweeps.
//!
//! The binary entry point parses [`cli::Cli`] and hands it to
//! [`cli::run`]; everything else is library code so integration tests can
//! drive the sweeps in-process.

pub mod cli;
pub mod experiments;
pub mod files;
