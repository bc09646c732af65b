//! Signal model: sparse binary signals on the cycle, optional atom profiles,
//! and noisy circularly shifted observations.
//!
//! An observation of a signal `x` of length `L` is `y = shift(x, s) + eps`
//! with `s` uniform on `{0, ..., L-1}` and `eps` i.i.d. Gaussian with
//! standard deviation `sigma`. Shifts act as `shift(x, s)[l] = x[(l-s) mod L]`.

use num_complex::Complex;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{MraError, Result};
use crate::fft;
use crate::rng::substream;
use crate::scalar::Scalar;

/// Smallest atom DFT modulus considered invertible; anything below marks the
/// atom as degenerate for deconvolution.
pub const ATOM_MIN_MODULUS: f64 = 1e-9;

/// Circularly shift a slice: `out[l] = x[(l - shift) mod L]`.
///
/// Positive shifts move content to the right; negative shifts are accepted
/// and reduced modulo the length. Shifting by `0` or any multiple of `L`
/// returns the input unchanged.
pub fn circular_shift<T: Copy>(x: &[T], shift: i64) -> Vec<T> {
    let len = x.len();
    if len == 0 {
        return Vec::new();
    }
    let s = shift.rem_euclid(len as i64) as usize;
    (0..len).map(|l| x[(l + len - s) % len]).collect()
}

/// A binary signal of length `L` together with its support set.
///
/// Entries are exactly `0` or `1`; the support lists the indices of the ones
/// in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal<T: Scalar> {
    values: Vec<T>,
    support: Vec<usize>,
}

impl<T: Scalar> SparseSignal<T> {
    /// Build from explicit sample values, which must all be exactly `0` or `1`.
    pub fn from_values(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(MraError::InvalidParameter(
                "signal length must be at least 1".into(),
            ));
        }
        let mut support = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            if v == T::one() {
                support.push(i);
            } else if v != T::zero() {
                return Err(MraError::InvalidParameter(format!(
                    "signal entry {i} is {v}, expected exactly 0 or 1"
                )));
            }
        }
        Ok(SparseSignal { values, support })
    }

    /// Build from a support set; indices must be in range and distinct.
    pub fn from_support(len: usize, support: &[usize]) -> Result<Self> {
        if len == 0 {
            return Err(MraError::InvalidParameter(
                "signal length must be at least 1".into(),
            ));
        }
        let mut values = vec![T::zero(); len];
        for &i in support {
            if i >= len {
                return Err(MraError::InvalidParameter(format!(
                    "support index {i} out of range for length {len}"
                )));
            }
            if values[i] == T::one() {
                return Err(MraError::InvalidParameter(format!(
                    "support index {i} repeated"
                )));
            }
            values[i] = T::one();
        }
        let mut sorted: Vec<usize> = support.to_vec();
        sorted.sort_unstable();
        Ok(SparseSignal { values, support: sorted })
    }

    /// Signal length `L`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when the length is zero (never, for validated signals).
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of ones `M`.
    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    /// Sample values.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Indices of the ones, increasing.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Consume into the sample vector.
    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Threshold a continuous vector at 1/2 into a binary signal.
    pub fn from_thresholded(x: &[T]) -> Self {
        assert!(!x.is_empty(), "signal length must be at least 1");
        let half = T::cast(0.5);
        let values: Vec<T> = x
            .iter()
            .map(|&v| if v > half { T::one() } else { T::zero() })
            .collect();
        SparseSignal::from_values(values).expect("thresholded entries are binary")
    }

    /// The signal circularly shifted by `shift`.
    pub fn shifted(&self, shift: i64) -> Self {
        let values = circular_shift(&self.values, shift);
        SparseSignal::from_values(values).expect("shift preserves binary entries")
    }
}

/// Known point-spread profile ("atom") placed at every support index.
///
/// The default atom is the discrete delta, in which case signals are the
/// plain binary vectors. Construction precomputes the DFT and rejects
/// profiles with any negligible Fourier coefficient, since those cannot be
/// deconvolved when estimating features.
#[derive(Debug, Clone)]
pub struct AtomProfile<T: Scalar> {
    samples: Vec<T>,
    dft: Vec<Complex<T>>,
    is_delta: bool,
}

impl<T: Scalar> AtomProfile<T> {
    /// The discrete delta of length `len`: `[1, 0, ..., 0]`.
    pub fn delta(len: usize) -> Self {
        assert!(len >= 1, "atom length must be at least 1");
        let mut samples = vec![T::zero(); len];
        samples[0] = T::one();
        let dft = vec![Complex::new(T::one(), T::zero()); len];
        AtomProfile { samples, dft, is_delta: true }
    }

    /// Build from explicit samples, rejecting degenerate profiles.
    pub fn new(samples: Vec<T>) -> Result<Self> {
        if samples.is_empty() {
            return Err(MraError::InvalidParameter(
                "atom length must be at least 1".into(),
            ));
        }
        let dft = fft::dft(&samples);
        for (k, v) in dft.iter().enumerate() {
            if v.norm().as_f64() < ATOM_MIN_MODULUS {
                return Err(MraError::DegenerateAtom { index: k });
            }
        }
        let is_delta = samples[0] == T::one()
            && samples.iter().skip(1).all(|&v| v == T::zero());
        Ok(AtomProfile { samples, dft, is_delta })
    }

    /// Atom length (always equals the signal length it is used with).
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// True when the length is zero (never, for validated atoms).
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time-domain samples.
    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    /// Precomputed DFT of the samples.
    pub fn dft(&self) -> &[Complex<T>] {
        &self.dft
    }

    /// True for the discrete delta, letting callers skip deconvolution.
    pub fn is_delta(&self) -> bool {
        self.is_delta
    }
}

/// A batch of noisy shifted observations of one (unknown) signal.
#[derive(Debug, Clone)]
pub struct ObservationSet<T: Scalar> {
    len: usize,
    sigma: T,
    observations: Vec<Vec<T>>,
    true_shifts: Vec<usize>,
    seed: u64,
}

impl<T: Scalar> ObservationSet<T> {
    /// Assemble from raw parts, validating lengths and `sigma >= 0`.
    /// `true_shifts` may be empty when the generating shifts are unknown
    /// (e.g. data read from an external file).
    pub fn new(
        len: usize,
        sigma: T,
        observations: Vec<Vec<T>>,
        true_shifts: Vec<usize>,
        seed: u64,
    ) -> Result<Self> {
        if len == 0 {
            return Err(MraError::InvalidParameter(
                "observation length must be at least 1".into(),
            ));
        }
        if sigma < T::zero() {
            return Err(MraError::InvalidParameter(
                "sigma must be nonnegative".into(),
            ));
        }
        if observations.iter().any(|y| y.len() != len) {
            return Err(MraError::InvalidParameter(
                "every observation must have the declared length".into(),
            ));
        }
        if !true_shifts.is_empty() && true_shifts.len() != observations.len() {
            return Err(MraError::InvalidParameter(
                "true_shifts must be empty (unknown) or match the batch size".into(),
            ));
        }
        if true_shifts.iter().any(|&s| s >= len) {
            return Err(MraError::InvalidParameter(
                "true shifts must be reduced modulo the length".into(),
            ));
        }
        Ok(ObservationSet { len, sigma, observations, true_shifts, seed })
    }

    /// Signal length `L`.
    pub fn len(&self) -> usize {
        self.len
    }

    /// True when the batch holds no observations.
    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Number of observations `n`.
    pub fn num_observations(&self) -> usize {
        self.observations.len()
    }

    /// Noise standard deviation used during generation.
    pub fn sigma(&self) -> T {
        self.sigma
    }

    /// Observation vectors, one per row.
    pub fn observations(&self) -> &[Vec<T>] {
        &self.observations
    }

    /// Ground-truth shifts (kept for diagnostics; estimators never read
    /// them). Empty when unknown.
    pub fn true_shifts(&self) -> &[usize] {
        &self.true_shifts
    }

    /// Seed the batch was generated from.
    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Draw a signal with i.i.d. Bernoulli(`q`) entries.
///
/// Requires `0 <= q <= 1`. The expected sparsity is `q * len`.
pub fn sample_bernoulli_signal<T: Scalar, R: Rng>(
    len: usize,
    q: f64,
    rng: &mut R,
) -> SparseSignal<T> {
    assert!(len >= 1, "signal length must be at least 1");
    assert!((0.0..=1.0).contains(&q), "q must lie in [0, 1]");
    let values: Vec<T> = (0..len)
        .map(|_| if rng.gen_bool(q) { T::one() } else { T::zero() })
        .collect();
    SparseSignal::from_values(values).expect("entries are binary by construction")
}

/// Draw a signal whose support is a uniformly random `sparsity`-subset of
/// `{0, ..., len-1}`.
pub fn sample_fixed_sparsity<T: Scalar, R: Rng>(
    len: usize,
    sparsity: usize,
    rng: &mut R,
) -> Result<SparseSignal<T>> {
    if len == 0 {
        return Err(MraError::InvalidParameter(
            "signal length must be at least 1".into(),
        ));
    }
    if sparsity > len {
        return Err(MraError::InvalidParameter(format!(
            "sparsity {sparsity} exceeds length {len}"
        )));
    }
    let support: Vec<usize> = sample_indices(rng, len, sparsity).into_vec();
    SparseSignal::from_support(len, &support)
}

/// Place one copy of `atom` at every support index, summing overlaps:
/// `out[(m + j) mod L] += atom[j]` for each support index `m`.
///
/// With the delta atom this reproduces the binary signal itself.
pub fn embed_atoms<T: Scalar>(support: &[usize], atom: &AtomProfile<T>, len: usize) -> Vec<T> {
    assert_eq!(atom.len(), len, "atom length must match signal length");
    let mut out = vec![T::zero(); len];
    for &m in support {
        assert!(m < len, "support index out of range");
        for (j, &g) in atom.samples().iter().enumerate() {
            out[(m + j) % len] += g;
        }
    }
    out
}

/// Generate `n` observations of `signal` (embedded through `atom`) at noise
/// level `sigma`, from a master seed.
///
/// Observation `i` draws its shift and noise from child stream `i` of
/// `seed`, so the batch is reproducible and independent of generation order.
pub fn generate_observations<T: Scalar>(
    signal: &SparseSignal<T>,
    atom: &AtomProfile<T>,
    n: usize,
    sigma: T,
    seed: u64,
) -> ObservationSet<T> {
    assert!(sigma >= T::zero(), "sigma must be nonnegative");
    let len = signal.len();
    let base = embed_atoms(signal.support(), atom, len);
    let mut observations = Vec::with_capacity(n);
    let mut true_shifts = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = substream(seed, i as u64);
        let shift = rng.gen_range(0..len);
        let mut y = circular_shift(&base, shift as i64);
        if sigma > T::zero() {
            for v in y.iter_mut() {
                let e: f64 = rng.sample(StandardNormal);
                *v += sigma * T::cast(e);
            }
        }
        observations.push(y);
        true_shifts.push(shift);
    }
    ObservationSet { len, sigma, observations, true_shifts, seed }
}

/// Histogram of circular differences `(a - b) mod L` over ordered pairs of
/// distinct support indices. Entry `d` counts the pairs at difference `d`;
/// entry `0` is always zero because pairs are distinct.
pub fn difference_multiset(support: &[usize], len: usize) -> Vec<usize> {
    assert!(len >= 1, "length must be at least 1");
    let mut counts = vec![0usize; len];
    for (i, &a) in support.iter().enumerate() {
        assert!(a < len, "support index out of range");
        for (j, &b) in support.iter().enumerate() {
            if i != j {
                counts[(a + len - b) % len] += 1;
            }
        }
    }
    counts
}

/// True when all pairwise circular differences of the support are distinct,
/// i.e. the difference histogram never exceeds one.
pub fn is_collision_free(support: &[usize], len: usize) -> bool {
    difference_multiset(support, len).iter().all(|&c| c <= 1)
}
