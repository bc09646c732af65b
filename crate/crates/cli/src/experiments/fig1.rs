//! Iteration-count scaling of the projection solver on noiseless
//! instances: how fast does sparse recovery from an exact power spectrum
//! get harder as the sparsity level grows?
//!
//! Each trial samples a fresh signal with exactly `M` ones, feeds its exact
//! power spectrum to the projection solver, and records the iterations
//! until the power-spectrum residual of the binarized iterate drops below
//! the tolerance. The summary reports per-cell medians; the headline
//! behavior is a median that grows exponentially with `M`.

use std::path::Path;

use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;
use sparse_mra::invariants::power_spectrum;
use sparse_mra::rng::{child_seed, substream};
use sparse_mra::rrr::{rrr_solve, RrrConfig};
use sparse_mra::signal::sample_fixed_sparsity;

use super::{cell_trial_seed, median, ResultsTable};

/// Results-table schema comment.
pub const RESULTS_SCHEMA: &str = "# fig1 v1: L,M,trial,iterations,converged";
/// Summary-table schema comment.
pub const SUMMARY_SCHEMA: &str =
    "# fig1-summary v1: L,M,trials,converged,median_iterations";
const RESULTS_HEADER: [&str; 5] = ["L", "M", "trial", "iterations", "converged"];
const SUMMARY_HEADER: [&str; 5] =
    ["L", "M", "trials", "converged", "median_iterations"];

/// Grid and solver settings for the iteration-scaling run.
#[derive(Debug, Clone, Serialize)]
pub struct Fig1Config {
    /// Signal lengths to sweep.
    pub l_list: Vec<usize>,
    /// Sparsity levels to sweep.
    pub m_list: Vec<usize>,
    /// Trials per `(L, M)` cell, each with a fresh signal.
    pub trials: usize,
    /// Solver relaxation parameter.
    pub beta: f64,
    /// Solver residual tolerance.
    pub tol: f64,
    /// Solver iteration cap.
    pub max_iter: usize,
    /// Master seed; every trial derives an independent substream.
    pub seed: u64,
}

impl Fig1Config {
    /// Default grid. Desk scale runs 50 trials per cell; full scale runs
    /// the complete 500.
    pub fn defaults(seed: u64, paper_scale: bool) -> Self {
        Fig1Config {
            l_list: vec![80, 120],
            m_list: vec![2, 4, 6, 8, 10, 12, 14, 16, 18, 20],
            trials: if paper_scale { 500 } else { 50 },
            beta: 0.5,
            tol: 1e-5,
            max_iter: 1_000_000,
            seed,
        }
    }
}

/// One summary row: the median iteration count of a grid cell.
#[derive(Debug, Clone)]
pub struct Fig1Cell {
    /// Signal length.
    pub len: usize,
    /// Sparsity level.
    pub sparsity: usize,
    /// Trials recorded.
    pub trials: usize,
    /// Trials whose residual met the tolerance.
    pub converged: usize,
    /// Median iteration count over all recorded trials.
    pub median_iterations: f64,
}

/// Outcome handed back to callers (the same numbers land in the CSVs).
#[derive(Debug, Clone)]
pub struct Fig1Outcome {
    /// Per-cell summaries, sorted by `(L, M)`.
    pub cells: Vec<Fig1Cell>,
}

/// Run the sweep, appending to `fig1_results.csv` under `dir` (cells with
/// existing rows are skipped) and rewriting `fig1_summary.csv`.
pub fn run(config: &Fig1Config, dir: &Path, fresh: bool) -> Result<Fig1Outcome> {
    super::check_meta(
        dir,
        "fig1",
        config,
        fresh,
        &["fig1_results.csv", "fig1_summary.csv"],
    )?;
    let results_path = dir.join("fig1_results.csv");
    let mut table =
        ResultsTable::open(&results_path, RESULTS_SCHEMA, &RESULTS_HEADER, 3)?;

    let cells: Vec<(usize, usize)> = config
        .l_list
        .iter()
        .flat_map(|&l| config.m_list.iter().map(move |&m| (l, m)))
        .collect();
    for (cell_index, &(l, m)) in cells.iter().enumerate() {
        let pending: Vec<usize> = (0..config.trials)
            .filter(|&t| {
                !table.contains(&[l.to_string(), m.to_string(), t.to_string()])
            })
            .collect();
        if pending.is_empty() {
            continue;
        }
        let rows: Vec<Vec<String>> = pending
            .par_iter()
            .map(|&t| run_trial(config, cell_index as u64, l, m, t))
            .collect::<Result<_>>()?;
        table.append_rows(&rows)?;
    }

    let cells = summarize(&table)?;
    let summary_rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| {
            vec![
                c.len.to_string(),
                c.sparsity.to_string(),
                c.trials.to_string(),
                c.converged.to_string(),
                c.median_iterations.to_string(),
            ]
        })
        .collect();
    super::write_summary(
        &dir.join("fig1_summary.csv"),
        SUMMARY_SCHEMA,
        &SUMMARY_HEADER,
        &summary_rows,
    )?;
    Ok(Fig1Outcome { cells })
}

fn run_trial(
    config: &Fig1Config,
    cell: u64,
    l: usize,
    m: usize,
    trial: usize,
) -> Result<Vec<String>> {
    let seed = cell_trial_seed(config.seed, cell, trial as u64);
    let mut rng = substream(seed, 0);
    let signal = sample_fixed_sparsity::<f64, _>(l, m, &mut rng)?;
    let ps = power_spectrum(signal.values());
    let solver = RrrConfig {
        beta: config.beta,
        tol: config.tol,
        max_iter: config.max_iter,
        seed: child_seed(seed, 1),
    };
    let result = rrr_solve(&ps, m, &solver)?;
    Ok(vec![
        l.to_string(),
        m.to_string(),
        trial.to_string(),
        result.iterations.to_string(),
        result.converged.to_string(),
    ])
}

fn summarize(table: &ResultsTable) -> Result<Vec<Fig1Cell>> {
    let mut groups: std::collections::BTreeMap<(usize, usize), (usize, Vec<f64>)> =
        std::collections::BTreeMap::new();
    for row in table.all_rows()? {
        let len: usize = row[0].parse()?;
        let sparsity: usize = row[1].parse()?;
        let iterations: f64 = row[3].parse()?;
        let converged = row[4] == "true";
        let entry = groups.entry((len, sparsity)).or_default();
        entry.0 += usize::from(converged);
        entry.1.push(iterations);
    }
    Ok(groups
        .into_iter()
        .map(|((len, sparsity), (converged, samples))| Fig1Cell {
            len,
            sparsity,
            trials: samples.len(),
            converged,
            median_iterations: median(&samples),
        })
        .collect())
}
