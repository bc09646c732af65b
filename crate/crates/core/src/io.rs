//! JSON wire formats for signals, observations, atoms, invariant
//! estimates, and solver outputs.
//!
//! Numbers are `f64` on disk regardless of the in-memory scalar type.
//! Readers ignore unknown fields, so files may carry extra metadata;
//! writers emit exactly the fields documented here. Optional fields are
//! omitted when absent.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{MraError, Result};
use crate::invariants::InvariantEstimates;
use crate::signal::{AtomProfile, ObservationSet, SparseSignal};

/// A binary signal: `{"L": …, "values": […]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalFile {
    /// Signal length.
    #[serde(rename = "L")]
    pub len: usize,
    /// Sample values, exactly 0.0 or 1.0.
    pub values: Vec<f64>,
}

impl SignalFile {
    /// Wrap an in-memory signal for writing.
    pub fn from_signal(signal: &SparseSignal<f64>) -> Self {
        SignalFile { len: signal.len(), values: signal.values().to_vec() }
    }

    /// Validate and convert to the in-memory representation.
    pub fn to_signal(&self) -> Result<SparseSignal<f64>> {
        if self.values.len() != self.len {
            return Err(MraError::InvalidParameter(format!(
                "signal file declares L = {} but holds {} values",
                self.len,
                self.values.len()
            )));
        }
        SparseSignal::from_values(self.values.clone())
    }
}

/// A batch of noisy observations:
/// `{"L": …, "sigma": …, "n": …, "observations": [[…], …], "seed": …}`
/// plus an optional `true_shifts` array for diagnostic tooling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationsFile {
    /// Length of each observation.
    #[serde(rename = "L")]
    pub len: usize,
    /// Noise standard deviation used during generation.
    pub sigma: f64,
    /// Number of observations (must match the outer array length).
    pub n: usize,
    /// Row-per-observation matrix.
    pub observations: Vec<Vec<f64>>,
    /// Seed the batch was generated from (0 for external data).
    pub seed: u64,
    /// Generating shifts when known; never read by solvers.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub true_shifts: Option<Vec<usize>>,
}

impl ObservationsFile {
    /// Wrap an in-memory observation batch for writing.
    pub fn from_set(set: &ObservationSet<f64>) -> Self {
        let true_shifts = if set.true_shifts().is_empty() {
            None
        } else {
            Some(set.true_shifts().to_vec())
        };
        ObservationsFile {
            len: set.len(),
            sigma: set.sigma(),
            n: set.num_observations(),
            observations: set.observations().to_vec(),
            seed: set.seed(),
            true_shifts,
        }
    }

    /// Validate and convert to the in-memory representation.
    pub fn to_set(&self) -> Result<ObservationSet<f64>> {
        if self.n != self.observations.len() {
            return Err(MraError::InvalidParameter(format!(
                "observation file declares n = {} but holds {} rows",
                self.n,
                self.observations.len()
            )));
        }
        let shifts = self.true_shifts.clone().unwrap_or_default();
        ObservationSet::new(
            self.len,
            self.sigma,
            self.observations.clone(),
            shifts,
            self.seed,
        )
    }
}

/// A localized atom profile: `{"samples": […]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomFile {
    /// Atom samples, one per signal position (localized atoms are
    /// zero-padded to the signal length).
    pub samples: Vec<f64>,
}

impl AtomFile {
    /// Wrap an in-memory atom for writing.
    pub fn from_atom(atom: &AtomProfile<f64>) -> Self {
        AtomFile { samples: atom.samples().to_vec() }
    }

    /// Validate and convert to the in-memory representation.
    pub fn to_atom(&self) -> Result<AtomProfile<f64>> {
        AtomProfile::new(self.samples.clone())
    }
}

/// Shift-invariant feature estimates. The bispectrum is stored row-major
/// with interleaved real and imaginary parts, so its array has `2 L²`
/// entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantsFile {
    /// Signal length.
    #[serde(rename = "L")]
    pub len: usize,
    /// Observations that entered the estimate.
    pub n: usize,
    /// Noise level assumed by the debiasing step.
    pub sigma: f64,
    /// Estimated signal mean.
    pub mean: f64,
    /// Debiased power spectrum, length `L`.
    pub power_spectrum: Vec<f64>,
    /// Debiased bispectrum, `[re(0,0), im(0,0), re(0,1), im(0,1), …]`.
    pub bispectrum: Vec<f64>,
}

impl InvariantsFile {
    /// Wrap in-memory estimates for writing.
    pub fn from_estimates(estimates: &InvariantEstimates<f64>) -> Self {
        let mut bispectrum = Vec::with_capacity(2 * estimates.bispectrum_est.len());
        for value in &estimates.bispectrum_est {
            bispectrum.push(value.re);
            bispectrum.push(value.im);
        }
        InvariantsFile {
            len: estimates.len(),
            n: estimates.n_used,
            sigma: estimates.sigma_assumed,
            mean: estimates.mean_est,
            power_spectrum: estimates.power_spectrum_est.clone(),
            bispectrum,
        }
    }

    /// Validate and convert to the in-memory representation.
    pub fn to_estimates(&self) -> Result<InvariantEstimates<f64>> {
        if self.power_spectrum.len() != self.len {
            return Err(MraError::InvalidParameter(format!(
                "invariants file declares L = {} but the power spectrum has {} entries",
                self.len,
                self.power_spectrum.len()
            )));
        }
        if self.bispectrum.len() != 2 * self.len * self.len {
            return Err(MraError::InvalidParameter(format!(
                "bispectrum must hold 2 L^2 = {} interleaved entries, got {}",
                2 * self.len * self.len,
                self.bispectrum.len()
            )));
        }
        let bispectrum: Vec<Complex<f64>> = self
            .bispectrum
            .chunks_exact(2)
            .map(|pair| Complex::new(pair[0], pair[1]))
            .collect();
        InvariantEstimates::from_parts(
            self.mean,
            self.power_spectrum.clone(),
            bispectrum,
            self.n,
            self.sigma,
        )
    }
}

/// A solver's output: the thresholded estimate plus whatever diagnostics
/// the method produces. Fields that a method does not populate are omitted
/// from the JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateFile {
    /// Signal length.
    #[serde(rename = "L")]
    pub len: usize,
    /// Producing method, e.g. `"rrr"`, `"em"`, `"bispectrum"`, `"sdp"`.
    pub method: String,
    /// Binary estimate values.
    pub values: Vec<f64>,
    /// Pre-threshold iterate for methods that have one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub continuous: Option<Vec<f64>>,
    /// Iterations used.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub iterations: Option<usize>,
    /// Whether the method's own convergence criterion was met.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub converged: Option<bool>,
    /// Final residual for methods that track one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub residual: Option<f64>,
    /// Final model score for methods that track one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub score: Option<f64>,
    /// Rank-1 certificate gap for the lifted solver.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rank1_gap: Option<f64>,
}

impl EstimateFile {
    /// Start a record with just the estimate; diagnostics are filled in by
    /// the producing pipeline.
    pub fn new(method: &str, values: Vec<f64>) -> Self {
        EstimateFile {
            len: values.len(),
            method: method.to_string(),
            values,
            continuous: None,
            iterations: None,
            converged: None,
            residual: None,
            score: None,
            rank1_gap: None,
        }
    }

    /// Validate and convert the binary estimate.
    pub fn to_signal(&self) -> Result<SparseSignal<f64>> {
        if self.values.len() != self.len {
            return Err(MraError::InvalidParameter(format!(
                "estimate file declares L = {} but holds {} values",
                self.len,
                self.values.len()
            )));
        }
        SparseSignal::from_values(self.values.clone())
    }
}
