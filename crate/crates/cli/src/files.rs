//! File helpers shared by the subcommands: JSON documents, observation
//! matrices as CSV, and power-spectrum CSV export.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sparse_mra::io::ObservationsFile;

/// Schema comment emitted at the top of power-spectrum CSV exports.
pub const POWER_SPECTRUM_SCHEMA: &str = "# power-spectrum v1: k,power";
/// Schema comment emitted at the top of observation-matrix CSV exports.
pub const OBSERVATIONS_SCHEMA: &str =
    "# observations v1: one observation per row, no header";

/// Read and parse a JSON document.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file =
        File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file))
        .with_context(|| format!("parsing {}", path.display()))
}

/// Write a pretty-printed JSON document, creating parent directories.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    let file =
        File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value)
        .with_context(|| format!("writing {}", path.display()))?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Read a power spectrum from either a bare JSON array or any JSON object
/// with a `power_spectrum` array field (such as an invariants file).
pub fn read_power_spectrum(path: &Path) -> Result<Vec<f64>> {
    let value: serde_json::Value = read_json(path)?;
    let array = match &value {
        serde_json::Value::Array(entries) => entries,
        serde_json::Value::Object(map) => match map.get("power_spectrum") {
            Some(serde_json::Value::Array(entries)) => entries,
            _ => bail!(
                "{} is an object without a power_spectrum array",
                path.display()
            ),
        },
        _ => bail!(
            "{} holds neither a JSON array nor an object with power_spectrum",
            path.display()
        ),
    };
    array
        .iter()
        .map(|v| {
            v.as_f64()
                .with_context(|| format!("non-numeric entry {v} in {}", path.display()))
        })
        .collect()
}

/// Export a power spectrum as CSV for plotting.
pub fn write_power_spectrum_csv(path: &Path, ps: &[f64]) -> Result<()> {
    let mut file =
        File::create(path).with_context(|| format!("creating {}", path.display()))?;
    writeln!(file, "{POWER_SPECTRUM_SCHEMA}")?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(["k", "power"])?;
    for (k, &p) in ps.iter().enumerate() {
        writer.write_record([k.to_string(), p.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Export the observation matrix as CSV, one observation per row.
pub fn write_observations_csv(path: &Path, file: &ObservationsFile) -> Result<()> {
    let mut out =
        File::create(path).with_context(|| format!("creating {}", path.display()))?;
    writeln!(out, "{OBSERVATIONS_SCHEMA}")?;
    let mut writer = csv::Writer::from_writer(out);
    for row in &file.observations {
        writer.write_record(row.iter().map(|v| v.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

/// Read an observation matrix from CSV (one observation per row); the
/// noise level is not stored in this format and must be supplied.
pub fn read_observations_csv(path: &Path, sigma: f64) -> Result<ObservationsFile> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut observations: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.with_context(|| format!("reading {}", path.display()))?;
        let row: Vec<f64> = record
            .iter()
            .map(|field| {
                field
                    .trim()
                    .parse::<f64>()
                    .with_context(|| format!("non-numeric field {field:?}"))
            })
            .collect::<Result<_>>()?;
        observations.push(row);
    }
    if observations.is_empty() {
        bail!("{} holds no observations", path.display());
    }
    let len = observations[0].len();
    Ok(ObservationsFile {
        len,
        sigma,
        n: observations.len(),
        observations,
        seed: 0,
        true_shifts: None,
    })
}

/// Read observations from JSON, or from CSV when the extension is `.csv`
/// (CSV requires an explicit noise level). A supplied `sigma` overrides the
/// JSON file's stored value.
pub fn read_observations(path: &Path, sigma: Option<f64>) -> Result<ObservationsFile> {
    let is_csv = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false);
    if is_csv {
        let sigma = sigma
            .context("CSV observation files carry no noise level; pass --sigma")?;
        read_observations_csv(path, sigma)
    } else {
        let mut file: ObservationsFile = read_json(path)?;
        if let Some(s) = sigma {
            file.sigma = s;
        }
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_spectrum_reads_arrays_and_objects() {
        let dir = tempfile::tempdir().unwrap();
        let bare = dir.path().join("bare.json");
        std::fs::write(&bare, "[4.0, 1.5, 1.5]").unwrap();
        assert_eq!(read_power_spectrum(&bare).unwrap(), vec![4.0, 1.5, 1.5]);

        let object = dir.path().join("invariants.json");
        std::fs::write(
            &object,
            r#"{"L": 3, "power_spectrum": [4.0, 1.5, 1.5], "mean": 0.1}"#,
        )
        .unwrap();
        assert_eq!(read_power_spectrum(&object).unwrap(), vec![4.0, 1.5, 1.5]);

        let bad = dir.path().join("bad.json");
        std::fs::write(&bad, r#"{"L": 3}"#).unwrap();
        assert!(read_power_spectrum(&bad).is_err());
    }

    #[test]
    fn observation_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.csv");
        let file = ObservationsFile {
            len: 3,
            sigma: 0.25,
            n: 2,
            observations: vec![vec![1.0, -0.5, 0.125], vec![0.0, 2.0, -1.0]],
            seed: 7,
            true_shifts: Some(vec![0, 1]),
        };
        write_observations_csv(&path, &file).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# observations v1"), "schema line first: {text}");
        let back = read_observations_csv(&path, 0.25).unwrap();
        assert_eq!(back.observations, file.observations);
        assert_eq!(back.len, 3);
        assert_eq!(back.n, 2);
        assert!(back.true_shifts.is_none(), "CSV cannot carry shifts");
    }

    #[test]
    fn sigma_flag_overrides_the_stored_value() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.json");
        std::fs::write(
            &path,
            r#"{"L": 2, "sigma": 0.5, "n": 1, "observations": [[0.0, 1.0]], "seed": 0}"#,
        )
        .unwrap();
        assert_eq!(read_observations(&path, None).unwrap().sigma, 0.5);
        assert_eq!(read_observations(&path, Some(2.0)).unwrap().sigma, 2.0);
    }
}
