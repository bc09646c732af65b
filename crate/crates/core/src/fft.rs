//! FFT plumbing shared by the feature estimators and the solvers.
//!
//! Convention: the forward transform is the plain unnormalized sum
//! `X[k] = sum_l x[l] * exp(-2*pi*i*k*l/L)` and the inverse divides by `L`,
//! so `idft(dft(x)) == x` up to roundoff.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Scalar;

/// Planned forward/inverse FFT pair for one transform length, with reusable
/// scratch space. Clone freely; plans are shared behind `Arc`.
#[derive(Clone)]
pub struct FftWorkspace<T: Scalar> {
    len: usize,
    plan_forward: Arc<dyn Fft<T>>,
    plan_inverse: Arc<dyn Fft<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Scalar> std::fmt::Debug for FftWorkspace<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftWorkspace").field("len", &self.len).finish()
    }
}

impl<T: Scalar> FftWorkspace<T> {
    /// Plan transforms of length `len`. Panics if `len == 0`.
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "transform length must be at least 1");
        let mut planner = FftPlanner::new();
        let plan_forward = planner.plan_fft_forward(len);
        let plan_inverse = planner.plan_fft_inverse(len);
        let scratch_len = plan_forward
            .get_inplace_scratch_len()
            .max(plan_inverse.get_inplace_scratch_len());
        FftWorkspace {
            len,
            plan_forward,
            plan_inverse,
            scratch: vec![Complex::new(T::zero(), T::zero()); scratch_len],
        }
    }

    /// Transform length.
    pub fn len(&self) -> usize {
        self.len
    }

    /// In-place unnormalized forward transform.
    pub fn forward(&mut self, buf: &mut [Complex<T>]) {
        debug_assert_eq!(buf.len(), self.len);
        self.plan_forward.process_with_scratch(buf, &mut self.scratch);
    }

    /// In-place inverse transform including the `1/L` normalization.
    pub fn inverse(&mut self, buf: &mut [Complex<T>]) {
        debug_assert_eq!(buf.len(), self.len);
        self.plan_inverse.process_with_scratch(buf, &mut self.scratch);
        let scale = T::one() / T::cast(self.len as f64);
        for v in buf.iter_mut() {
            *v = v.scale(scale);
        }
    }

    /// Forward DFT of a real vector.
    pub fn dft(&mut self, x: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> =
            x.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.forward(&mut buf);
        buf
    }

    /// Inverse DFT returning the complex result.
    pub fn idft(&mut self, spectrum: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut buf = spectrum.to_vec();
        self.inverse(&mut buf);
        buf
    }

    /// Inverse DFT of a spectrum known to come from a real vector; returns
    /// the real part and discards the (roundoff-sized) imaginary part.
    pub fn idft_real(&mut self, spectrum: &[Complex<T>]) -> Vec<T> {
        self.idft(spectrum).into_iter().map(|v| v.re).collect()
    }

    /// Circular cross-correlation `c[s] = sum_l y[l] * x[(l - s) mod L]`,
    /// i.e. the inner product of `y` with every circular shift of `x`,
    /// computed as `idft(dft(y) * conj(dft(x)))`.
    pub fn cross_correlation(&mut self, y: &[T], x: &[T]) -> Vec<T> {
        let yh = self.dft(y);
        let xh = self.dft(x);
        let prod: Vec<Complex<T>> =
            yh.iter().zip(&xh).map(|(a, b)| a * b.conj()).collect();
        self.idft_real(&prod)
    }
}

/// One-shot forward DFT of a real vector. Prefer [`FftWorkspace`] in loops.
pub fn dft<T: Scalar>(x: &[T]) -> Vec<Complex<T>> {
    FftWorkspace::new(x.len()).dft(x)
}

/// One-shot inverse DFT (divides by `L`).
pub fn idft<T: Scalar>(spectrum: &[Complex<T>]) -> Vec<Complex<T>> {
    FftWorkspace::new(spectrum.len()).idft(spectrum)
}
