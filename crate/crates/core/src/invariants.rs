//! Shift-invariant features: mean, power spectrum, and bispectrum.
//!
//! For a signal `x` with DFT `X`, the features are
//!
//! * mean `= (1/L) * sum_l x[l]`,
//! * power spectrum `P[k] = |X[k]|^2`,
//! * bispectrum `B[k1, k2] = X[k1] * X[k2] * conj(X[k1 + k2])`
//!   (indices mod `L`).
//!
//! All three are invariant under circular shifts, so they can be averaged
//! across observations without knowing the shifts. Averages of noisy
//! observations are biased; [`estimate_invariants`] subtracts the closed-form
//! bias terms:
//!
//! * `E|Y[k]|^2 = |X[k]|^2 + L*sigma^2` — flat offset on the power spectrum;
//! * `E B_y[k1,k2] = B_x[k1,k2] + sigma^2*L*X[0] * (d(k1) + d(k2) + d(k1+k2))`
//!   where `d(k)` is 1 at `k = 0 mod L` — the bispectrum is biased only on
//!   the three lines through the origin, because the Gaussian noise terms
//!   `E[e conj(e)]` pair up with the DC coefficient there (odd noise moments
//!   vanish).
//!
//! `X[0]` is unknown at estimation time and is itself estimated as `L` times
//! the sample mean. When observations are embedded through a non-delta atom,
//! features are debiased in the embedded domain and then deconvolved by the
//! atom's DFT.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{MraError, Result};
use crate::fft::FftWorkspace;
use crate::scalar::Scalar;
use crate::signal::{AtomProfile, ObservationSet};

pub use crate::fft::{dft, idft};

/// Observations per parallel accumulation chunk. Fixed (not a function of
/// thread count) so that merge order, and hence floating-point rounding, is
/// identical across runs and schedulers.
const ACCUMULATOR_CHUNK: usize = 256;

/// DFT, power spectrum, and mean of a single vector.
#[derive(Debug, Clone)]
pub struct SpectrumData<T: Scalar> {
    /// Forward DFT.
    pub dft: Vec<Complex<T>>,
    /// `|dft[k]|^2`.
    pub power_spectrum: Vec<T>,
    /// Sample mean `dft[0].re / L`.
    pub mean: T,
}

impl<T: Scalar> SpectrumData<T> {
    /// Compute all three quantities for one vector.
    pub fn of(x: &[T]) -> Self {
        let spectrum = crate::fft::dft(x);
        let power_spectrum = spectrum.iter().map(|v| v.norm_sqr()).collect();
        let mean = spectrum[0].re / T::cast(x.len() as f64);
        SpectrumData { dft: spectrum, power_spectrum, mean }
    }
}

/// Power spectrum `|X[k]|^2` of a vector.
pub fn power_spectrum<T: Scalar>(x: &[T]) -> Vec<T> {
    crate::fft::dft(x).iter().map(|v| v.norm_sqr()).collect()
}

/// Full `L x L` bispectrum matrix, stored row-major: entry `(k1, k2)` is
/// `X[k1] * X[k2] * conj(X[(k1 + k2) mod L])`.
#[derive(Debug, Clone)]
pub struct Bispectrum<T: Scalar> {
    len: usize,
    values: Vec<Complex<T>>,
}

impl<T: Scalar> Bispectrum<T> {
    /// Signal length `L` (the matrix is `L x L`).
    pub fn len(&self) -> usize {
        self.len
    }

    /// True when the matrix is empty (never, for validated inputs).
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Entry `(k1, k2)`.
    pub fn at(&self, k1: usize, k2: usize) -> Complex<T> {
        self.values[k1 * self.len + k2]
    }

    /// Row-major storage.
    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }
}

/// Bispectrum of a real vector.
pub fn bispectrum<T: Scalar>(x: &[T]) -> Bispectrum<T> {
    let spectrum = crate::fft::dft(x);
    Bispectrum { len: x.len(), values: bispectrum_of_spectrum(&spectrum) }
}

/// Bispectrum matrix assembled from an already-computed DFT.
fn bispectrum_of_spectrum<T: Scalar>(spectrum: &[Complex<T>]) -> Vec<Complex<T>> {
    let len = spectrum.len();
    let mut values = Vec::with_capacity(len * len);
    for k1 in 0..len {
        for k2 in 0..len {
            let k3 = (k1 + k2) % len;
            values.push(spectrum[k1] * spectrum[k2] * spectrum[k3].conj());
        }
    }
    values
}

/// Streaming accumulator of per-observation features. Accumulators over
/// disjoint batches merge exactly (sums of sums), enabling deterministic
/// parallel estimation.
#[derive(Debug, Clone)]
pub struct InvariantAccumulator<T: Scalar> {
    len: usize,
    count: usize,
    sum_of_samples: T,
    power_spectrum_sum: Vec<T>,
    bispectrum_sum: Vec<Complex<T>>,
    workspace: FftWorkspace<T>,
}

impl<T: Scalar> InvariantAccumulator<T> {
    /// Empty accumulator for observations of length `len`.
    pub fn new(len: usize) -> Self {
        InvariantAccumulator {
            len,
            count: 0,
            sum_of_samples: T::zero(),
            power_spectrum_sum: vec![T::zero(); len],
            bispectrum_sum: vec![Complex::new(T::zero(), T::zero()); len * len],
            workspace: FftWorkspace::new(len),
        }
    }

    /// Number of observations absorbed so far.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Absorb one observation.
    pub fn push(&mut self, y: &[T]) {
        assert_eq!(y.len(), self.len, "observation length mismatch");
        let spectrum = self.workspace.dft(y);
        self.sum_of_samples += y.iter().copied().sum();
        for (acc, v) in self.power_spectrum_sum.iter_mut().zip(&spectrum) {
            *acc += v.norm_sqr();
        }
        for k1 in 0..self.len {
            let row = &mut self.bispectrum_sum[k1 * self.len..(k1 + 1) * self.len];
            let s1 = spectrum[k1];
            for (k2, acc) in row.iter_mut().enumerate() {
                let k3 = (k1 + k2) % self.len;
                *acc += s1 * spectrum[k2] * spectrum[k3].conj();
            }
        }
        self.count += 1;
    }

    /// Merge another accumulator over a disjoint batch.
    pub fn merge(mut self, other: Self) -> Self {
        assert_eq!(self.len, other.len, "accumulator length mismatch");
        self.count += other.count;
        self.sum_of_samples += other.sum_of_samples;
        for (a, b) in self.power_spectrum_sum.iter_mut().zip(&other.power_spectrum_sum) {
            *a += *b;
        }
        for (a, b) in self.bispectrum_sum.iter_mut().zip(&other.bispectrum_sum) {
            *a += *b;
        }
        self
    }
}

/// Debiased, atom-deconvolved feature estimates from an observation batch.
#[derive(Debug, Clone)]
pub struct InvariantEstimates<T: Scalar> {
    len: usize,
    /// Estimated signal mean `(1/L) sum_l x[l]`.
    pub mean_est: T,
    /// Debiased power spectrum estimate, symmetrized so that entry `k`
    /// equals entry `L - k` exactly.
    pub power_spectrum_est: Vec<T>,
    /// Debiased bispectrum estimate, row-major `L x L`.
    pub bispectrum_est: Vec<Complex<T>>,
    /// Observations that entered the estimate.
    pub n_used: usize,
    /// Noise level assumed by the debiasing step.
    pub sigma_assumed: T,
}

impl<T: Scalar> InvariantEstimates<T> {
    /// Signal length `L`.
    pub fn len(&self) -> usize {
        self.len
    }

    /// True when the estimate is empty (never, for validated inputs).
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bispectrum estimate at `(k1, k2)`.
    pub fn bispectrum_at(&self, k1: usize, k2: usize) -> Complex<T> {
        self.bispectrum_est[k1 * self.len + k2]
    }

    /// Assemble from raw parts (e.g. deserialized files), validating the
    /// dimensions: `bispectrum_est` must be `L x L` for the `L` implied by
    /// the power spectrum.
    pub fn from_parts(
        mean_est: T,
        power_spectrum_est: Vec<T>,
        bispectrum_est: Vec<Complex<T>>,
        n_used: usize,
        sigma_assumed: T,
    ) -> Result<Self> {
        let len = power_spectrum_est.len();
        if len == 0 {
            return Err(MraError::InvalidParameter(
                "power spectrum must be non-empty".into(),
            ));
        }
        if bispectrum_est.len() != len * len {
            return Err(MraError::InvalidParameter(format!(
                "bispectrum has {} entries, expected {}",
                bispectrum_est.len(),
                len * len
            )));
        }
        Ok(InvariantEstimates {
            len,
            mean_est,
            power_spectrum_est,
            bispectrum_est,
            n_used,
            sigma_assumed,
        })
    }

    /// Exact feature values of a known signal, packaged as estimates. Used
    /// for noiseless pipelines and solver tests.
    pub fn exact_of(x: &[T]) -> Self {
        let data = SpectrumData::of(x);
        InvariantEstimates {
            len: x.len(),
            mean_est: data.mean,
            power_spectrum_est: data.power_spectrum,
            bispectrum_est: bispectrum_of_spectrum(&data.dft),
            n_used: 1,
            sigma_assumed: T::zero(),
        }
    }
}

/// Estimate mean, power spectrum, and bispectrum of the unknown signal from
/// noisy shifted observations.
///
/// `sigma` is the noise level assumed for bias subtraction (normally the
/// generation value). `atom` is deconvolved from the estimates; pass the
/// delta profile when observations are plain binary signals.
pub fn estimate_invariants<T: Scalar>(
    observations: &ObservationSet<T>,
    sigma: T,
    atom: &AtomProfile<T>,
) -> Result<InvariantEstimates<T>> {
    let len = observations.len();
    let n = observations.num_observations();
    if n == 0 {
        return Err(MraError::InvalidParameter(
            "cannot estimate invariants from zero observations".into(),
        ));
    }
    if sigma < T::zero() {
        return Err(MraError::InvalidParameter("sigma must be nonnegative".into()));
    }
    if atom.len() != len {
        return Err(MraError::InvalidParameter(
            "atom length must match observation length".into(),
        ));
    }
    // Defensive re-check; `AtomProfile::new` already rejects these.
    for (k, v) in atom.dft().iter().enumerate() {
        if v.norm().as_f64() < crate::signal::ATOM_MIN_MODULUS {
            return Err(MraError::DegenerateAtom { index: k });
        }
    }

    // Accumulate per-observation features in fixed-size chunks, then merge
    // the partial sums in chunk order. The chunk layout depends only on `n`,
    // so the result is bitwise identical for any thread count.
    let rows = observations.observations();
    let acc = rows
        .par_chunks(ACCUMULATOR_CHUNK)
        .map(|chunk| {
            let mut acc = InvariantAccumulator::new(len);
            for y in chunk {
                acc.push(y);
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .reduce(InvariantAccumulator::merge)
        .expect("at least one chunk");

    let n_t = T::cast(n as f64);
    let len_t = T::cast(len as f64);
    let sigma_sq = sigma * sigma;

    // Mean of all samples; with uniform shifts this estimates the signal
    // mean directly (in the embedded domain).
    let mean_embedded = acc.sum_of_samples / (n_t * len_t);
    // DC Fourier coefficient of the embedded signal, needed by the
    // bispectrum bias term.
    let dc = len_t * mean_embedded;

    // Power spectrum: subtract the flat noise floor, then enforce the exact
    // P[k] = P[L-k] symmetry that the finite average only satisfies
    // stochastically.
    let mut ps: Vec<T> = acc
        .power_spectrum_sum
        .iter()
        .map(|&s| s / n_t - len_t * sigma_sq)
        .collect();
    for k in 1..=(len - 1) / 2 {
        let avg = (ps[k] + ps[len - k]) / T::cast(2.0);
        ps[k] = avg;
        ps[len - k] = avg;
    }

    // Bispectrum: subtract the three bias lines through the origin.
    let line_bias = sigma_sq * len_t * dc;
    let mut bs: Vec<Complex<T>> = acc
        .bispectrum_sum
        .iter()
        .map(|&s| s.unscale(n_t))
        .collect();
    for k1 in 0..len {
        for k2 in 0..len {
            let mut delta_count = 0;
            if k1 == 0 {
                delta_count += 1;
            }
            if k2 == 0 {
                delta_count += 1;
            }
            if (k1 + k2) % len == 0 {
                delta_count += 1;
            }
            if delta_count > 0 {
                bs[k1 * len + k2].re -= T::cast(delta_count as f64) * line_bias;
            }
        }
    }

    // Deconvolve the atom: divide each feature by the matching product of
    // atom DFT coefficients.
    let mut mean_est = mean_embedded;
    if !atom.is_delta() {
        let g = atom.dft();
        mean_est = mean_embedded / g[0].re;
        for (k, p) in ps.iter_mut().enumerate() {
            *p = *p / g[k].norm_sqr();
        }
        for k1 in 0..len {
            for k2 in 0..len {
                let k3 = (k1 + k2) % len;
                let denom = g[k1] * g[k2] * g[k3].conj();
                bs[k1 * len + k2] = bs[k1 * len + k2] / denom;
            }
        }
    }

    Ok(InvariantEstimates {
        len,
        mean_est,
        power_spectrum_est: ps,
        bispectrum_est: bs,
        n_used: n,
        sigma_assumed: sigma,
    })
}
