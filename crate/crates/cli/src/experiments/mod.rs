//! Shared experiment plumbing: grid seeding, resumable CSV tables with
//! versioned schema comments, metadata records, and slope fitting.
//!
//! Every experiment writes three kinds of artifacts under its output
//! directory: a per-trial results table (append-only, used for resuming),
//! a deterministic summary table recomputed from the full results, and a
//! `*_meta.json` record of the exact configuration. A rerun with the same
//! configuration skips trials that already have rows; a rerun with a
//! different configuration is refused unless the caller clears the
//! directory or passes a fresh flag.

pub mod fig1;
pub mod fig2;
pub mod fig3;

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sparse_mra::rng::child_seed;

/// Independent seed for one trial of one grid cell.
pub fn cell_trial_seed(master: u64, cell: u64, trial: u64) -> u64 {
    child_seed(child_seed(master, cell), trial)
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "slope fit needs paired samples");
    assert!(x.len() >= 2, "slope fit needs at least two points");
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        cov += (xi - mean_x) * (yi - mean_y);
        var += (xi - mean_x) * (xi - mean_x);
    }
    cov / var
}

/// Median of a sample (mean of the middle pair for even sizes).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in median input"));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    }
}

/// Append-only CSV results table with a versioned schema comment, a header
/// row, and resume support keyed on the leading columns of each row.
pub struct ResultsTable {
    path: PathBuf,
    header: Vec<String>,
    key_columns: usize,
    done: HashSet<String>,
}

impl ResultsTable {
    /// Open (or create) the table, loading existing row keys for resume.
    pub fn open(
        path: &Path,
        schema: &str,
        header: &[&str],
        key_columns: usize,
    ) -> Result<Self> {
        assert!(key_columns >= 1 && key_columns <= header.len());
        let mut table = ResultsTable {
            path: path.to_path_buf(),
            header: header.iter().map(|s| s.to_string()).collect(),
            key_columns,
            done: HashSet::new(),
        };
        if path.exists() {
            let rows = read_rows(path, header)?;
            for row in rows {
                table.done.insert(row[..key_columns].join(","));
            }
        } else {
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            let mut file = File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            writeln!(file, "{schema}")?;
            let mut writer = csv::Writer::from_writer(file);
            writer.write_record(header)?;
            writer.flush()?;
        }
        Ok(table)
    }

    /// Whether a row with these key fields already exists.
    pub fn contains(&self, key_fields: &[String]) -> bool {
        assert_eq!(key_fields.len(), self.key_columns);
        self.done.contains(&key_fields.join(","))
    }

    /// Number of rows present.
    pub fn rows_done(&self) -> usize {
        self.done.len()
    }

    /// Append rows (serialized, flushed once) and record their keys.
    pub fn append_rows(&mut self, rows: &[Vec<String>]) -> Result<()> {
        if rows.is_empty() {
            return Ok(());
        }
        let file = OpenOptions::new()
            .append(true)
            .open(&self.path)
            .with_context(|| format!("appending to {}", self.path.display()))?;
        let mut writer = csv::Writer::from_writer(file);
        for row in rows {
            assert_eq!(row.len(), self.header.len(), "row width mismatch");
            writer.write_record(row)?;
            self.done.insert(row[..self.key_columns].join(","));
        }
        writer.flush()?;
        Ok(())
    }

    /// All rows currently on disk.
    pub fn all_rows(&self) -> Result<Vec<Vec<String>>> {
        read_rows(&self.path, &header_refs(&self.header))
    }
}

fn header_refs(header: &[String]) -> Vec<&str> {
    header.iter().map(|s| s.as_str()).collect()
}

/// Read a schema-commented CSV table, checking the header.
pub fn read_rows<S: AsRef<str>>(path: &Path, header: &[S]) -> Result<Vec<Vec<String>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let found: Vec<String> =
        reader.headers()?.iter().map(|s| s.to_string()).collect();
    let expected: Vec<&str> = header.iter().map(|s| s.as_ref()).collect();
    if found != expected {
        bail!(
            "{} has header {:?}, expected {:?} (stale file from another run?)",
            path.display(),
            found,
            expected
        );
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push(record.iter().map(|s| s.to_string()).collect());
    }
    Ok(rows)
}

/// Write a summary table from scratch (recomputed each run, deterministic
/// row order).
pub fn write_summary(
    path: &Path,
    schema: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let mut file =
        File::create(path).with_context(|| format!("creating {}", path.display()))?;
    writeln!(file, "{schema}")?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Record the configuration of an experiment run, refusing to mix
/// configurations in one output directory. With `fresh`, existing results
/// for this experiment are removed first.
pub fn check_meta<C: Serialize>(
    dir: &Path,
    experiment: &str,
    config: &C,
    fresh: bool,
    result_files: &[&str],
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let meta_path = dir.join(format!("{experiment}_meta.json"));
    let current = serde_json::json!({
        "experiment": experiment,
        "config": serde_json::to_value(config)?,
    });
    if fresh {
        for name in result_files {
            let path = dir.join(name);
            if path.exists() {
                std::fs::remove_file(&path)?;
            }
        }
        if meta_path.exists() {
            std::fs::remove_file(&meta_path)?;
        }
    }
    if meta_path.exists() {
        let existing: serde_json::Value = crate::files::read_json(&meta_path)?;
        if existing != current {
            bail!(
                "{} was produced with a different configuration; \
                 rerun with --fresh or a new --out directory",
                meta_path.display()
            );
        }
    } else {
        crate::files::write_json(&meta_path, &current)?;
    }
    Ok(())
}
