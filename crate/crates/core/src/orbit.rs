//! Error metrics modulo the symmetry group.
//!
//! Shift-invariant features determine a signal only up to circular shift,
//! and real features (power spectrum, or bispectrum magnitudes alone) also
//! up to reflection. Estimates are therefore scored against the whole orbit:
//! the reported error is the minimum relative error over every allowed
//! transform of the estimate.

use num_complex::Complex;

use crate::error::{MraError, Result};
use crate::fft::FftWorkspace;
use crate::scalar::Scalar;

/// Reflect a vector through the origin: `out[l] = x[(-l) mod L]`.
pub fn reflect<T: Copy>(x: &[T]) -> Vec<T> {
    let len = x.len();
    (0..len).map(|l| x[(len - l) % len]).collect()
}

/// Apply the group element (shift by `shift`, optionally reflect first).
pub fn apply_transform<T: Copy>(x: &[T], shift: usize, reflected: bool) -> Vec<T> {
    let base = if reflected { reflect(x) } else { x.to_vec() };
    crate::signal::circular_shift(&base, shift as i64)
}

/// Result of aligning an estimate to a reference orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitError<T: Scalar> {
    /// `min_T ||T(estimate) - reference||_2 / ||reference||_2` over the
    /// allowed transforms.
    pub relative_error: T,
    /// Shift of the best transform.
    pub best_shift: usize,
    /// Whether the best transform includes a reflection.
    pub reflected: bool,
    /// Whether reflections were allowed in the search.
    pub include_reflection: bool,
}

/// Align `estimate` to `reference` over all shifts (and reflections when
/// `include_reflection` is set) and report the minimal relative error.
///
/// Ties prefer the smallest shift, and an unreflected transform over a
/// reflected one. Errors when lengths differ or the reference is zero.
pub fn align_to_orbit<T: Scalar>(
    estimate: &[T],
    reference: &[T],
    include_reflection: bool,
) -> Result<OrbitError<T>> {
    if estimate.len() != reference.len() {
        return Err(MraError::InvalidParameter(format!(
            "length mismatch: estimate {} vs reference {}",
            estimate.len(),
            reference.len()
        )));
    }
    if estimate.is_empty() {
        return Err(MraError::InvalidParameter(
            "cannot align empty signals".into(),
        ));
    }
    let ref_norm_sq: T = reference.iter().map(|&v| v * v).sum();
    if ref_norm_sq == T::zero() {
        return Err(MraError::ZeroNormReference);
    }

    // ||shift(e, s) - r||^2 = ||e||^2 + ||r||^2 - 2 <r, shift(e, s)>, so the
    // best transform maximizes the inner product, and the inner products
    // against all shifts are one circular cross-correlation. For the
    // reflected branch, dft(reflect(e)) = conj(dft(e)), so that correlation
    // uses the product of the two DFTs without conjugation. The correlations
    // only *select* the transform; the distance is then recomputed in the
    // time domain, which avoids cancellation and makes exact matches report
    // exactly zero.
    let len = reference.len();
    let mut workspace = FftWorkspace::new(len);
    let ref_dft = workspace.dft(reference);
    let est_dft = workspace.dft(estimate);

    let direct: Vec<Complex<T>> = ref_dft
        .iter()
        .zip(&est_dft)
        .map(|(r, e)| r * e.conj())
        .collect();
    let direct_corr = workspace.idft_real(&direct);

    let mut best_corr = direct_corr[0];
    let mut best_shift = 0usize;
    let mut best_reflected = false;
    for (s, &c) in direct_corr.iter().enumerate() {
        if c > best_corr {
            best_corr = c;
            best_shift = s;
        }
    }

    if include_reflection {
        let mirrored: Vec<Complex<T>> = ref_dft
            .iter()
            .zip(&est_dft)
            .map(|(r, e)| r * e)
            .collect();
        let mirrored_corr = workspace.idft_real(&mirrored);
        for (s, &c) in mirrored_corr.iter().enumerate() {
            if c > best_corr {
                best_corr = c;
                best_shift = s;
                best_reflected = true;
            }
        }
    }

    let aligned = apply_transform(estimate, best_shift, best_reflected);
    let dist_sq: T = aligned
        .iter()
        .zip(reference)
        .map(|(&a, &r)| (a - r) * (a - r))
        .sum();
    let relative_error = dist_sq.sqrt() / ref_norm_sq.sqrt();
    Ok(OrbitError {
        relative_error,
        best_shift,
        reflected: best_reflected,
        include_reflection,
    })
}
