//! Signal recovery by relaxed-reflect-reflect (RRR) projections.
//!
//! The solver looks for a binary vector with a prescribed sparsity `M`
//! (constraint set A) and a prescribed power spectrum (constraint set B).
//! From an iterate `x` it forms the two projections and takes the step
//!
//! ```text
//! x <- x + beta * ( P_B(2 * P_A(x) - x) - P_A(x) )
//! ```
//!
//! Fixed points satisfy `P_B(2 P_A(x) - x) = P_A(x)`, i.e. `P_A(x)` lies in
//! both sets. At `beta = 1` the step is exactly Douglas-Rachford splitting,
//! `x <- (x + R_B(R_A(x))) / 2` with reflections `R(x) = 2 P(x) - x`; other
//! `beta` values relax the step length. The iteration is a fixed-point
//! search, not a descent method: the residual fluctuates until the iterate
//! falls into the basin of a solution, and the time to that event grows
//! steeply with `M`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::error::{MraError, Result};
use crate::fft::FftWorkspace;
use crate::scalar::Scalar;
use crate::signal::SparseSignal;

/// Magnitudes below this are treated as zero when normalizing Fourier
/// phases in the spectrum projection.
const PHASE_EPS: f64 = 1e-12;

/// Tuning knobs for [`rrr_solve`].
#[derive(Debug, Clone)]
pub struct RrrConfig<T: Scalar> {
    /// Relaxation parameter, in `(0, 2)`. `1` is plain Douglas-Rachford.
    pub beta: T,
    /// Convergence threshold on the relative power-spectrum residual of the
    /// binarized iterate.
    pub tol: T,
    /// Iteration cap.
    pub max_iter: usize,
    /// Seed for the random starting point.
    pub seed: u64,
}

impl<T: Scalar> Default for RrrConfig<T> {
    fn default() -> Self {
        RrrConfig {
            beta: T::cast(0.5),
            tol: T::cast(1e-5),
            max_iter: 1_000_000,
            seed: 0,
        }
    }
}

/// Outcome of an RRR run.
#[derive(Debug, Clone)]
pub struct RrrResult<T: Scalar> {
    /// Binarized iterate at termination.
    pub estimate: SparseSignal<T>,
    /// Iterations performed (counting the one that observed convergence).
    pub iterations: usize,
    /// Whether the residual dropped below the tolerance.
    pub converged: bool,
    /// Relative power-spectrum residual at termination.
    pub final_residual: T,
}

/// Project onto the sparsity set: keep the `sparsity` largest entries as
/// ones, zero the rest. Ties are broken toward the lowest index, making the
/// projection deterministic.
pub fn project_sparsity<T: Scalar>(x: &[T], sparsity: usize) -> Vec<T> {
    assert!(sparsity <= x.len(), "sparsity exceeds vector length");
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| {
        x[b].partial_cmp(&x[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut out = vec![T::zero(); x.len()];
    for &i in &order[..sparsity] {
        out[i] = T::one();
    }
    out
}

/// Project onto the set of vectors with power spectrum `ps`: rescale each
/// Fourier coefficient to the target magnitude, keeping its phase. A
/// coefficient with negligible magnitude keeps phase `1`. Negative target
/// entries (possible in estimated spectra) are clamped to zero.
pub fn project_power_spectrum<T: Scalar>(x: &[T], ps: &[T]) -> Vec<T> {
    let mut workspace = FftWorkspace::new(x.len());
    project_power_spectrum_with(&mut workspace, x, ps)
}

/// As [`project_power_spectrum`], reusing a planned workspace.
pub fn project_power_spectrum_with<T: Scalar>(
    workspace: &mut FftWorkspace<T>,
    x: &[T],
    ps: &[T],
) -> Vec<T> {
    assert_eq!(x.len(), ps.len(), "power spectrum length mismatch");
    let eps = T::cast(PHASE_EPS);
    let mut spectrum = workspace.dft(x);
    for (v, &p) in spectrum.iter_mut().zip(ps) {
        let target = if p > T::zero() { p.sqrt() } else { T::zero() };
        let modulus = v.norm();
        if modulus < eps {
            *v = num_complex::Complex::new(target, T::zero());
        } else {
            *v = v.scale(target / modulus);
        }
    }
    workspace.idft_real(&spectrum)
}

/// Relative distance between the power spectrum of `x` and the target:
/// `|| ps(x) - ps ||_2 / || ps ||_2`.
pub fn power_spectrum_residual<T: Scalar>(x: &[T], ps: &[T]) -> T {
    let mut workspace = FftWorkspace::new(x.len());
    power_spectrum_residual_with(&mut workspace, x, ps)
}

fn power_spectrum_residual_with<T: Scalar>(
    workspace: &mut FftWorkspace<T>,
    x: &[T],
    ps: &[T],
) -> T {
    let spectrum = workspace.dft(x);
    let mut num = T::zero();
    let mut den = T::zero();
    for (v, &p) in spectrum.iter().zip(ps) {
        let d = v.norm_sqr() - p;
        num += d * d;
        den += p * p;
    }
    num.sqrt() / den.sqrt()
}

/// Search for a binary signal with sparsity `sparsity` and power spectrum
/// `ps`, starting from a uniform random point drawn from `config.seed`.
///
/// Each iteration first binarizes the iterate and checks its residual, so a
/// feasible starting point terminates at iteration 1. Hitting the iteration
/// cap is reported through `converged = false`, not an error.
pub fn rrr_solve<T: Scalar>(
    ps: &[T],
    sparsity: usize,
    config: &RrrConfig<T>,
) -> Result<RrrResult<T>> {
    let len = ps.len();
    if len == 0 {
        return Err(MraError::InvalidParameter(
            "power spectrum must be non-empty".into(),
        ));
    }
    if sparsity > len {
        return Err(MraError::InvalidParameter(format!(
            "sparsity {sparsity} exceeds length {len}"
        )));
    }
    if !(config.beta > T::zero() && config.beta < T::cast(2.0)) {
        return Err(MraError::InvalidParameter(
            "beta must lie in (0, 2)".into(),
        ));
    }
    if !(config.tol > T::zero()) {
        return Err(MraError::InvalidParameter("tol must be positive".into()));
    }
    if config.max_iter == 0 {
        return Err(MraError::InvalidParameter(
            "max_iter must be at least 1".into(),
        ));
    }
    let ps_norm_sq: T = ps.iter().map(|&p| p * p).sum();
    if ps_norm_sq == T::zero() {
        // Only the zero signal has an all-zero spectrum; it is feasible only
        // at sparsity 0, where the solve is trivial.
        if sparsity == 0 {
            return Ok(RrrResult {
                estimate: SparseSignal::from_support(len, &[])?,
                iterations: 1,
                converged: true,
                final_residual: T::zero(),
            });
        }
        return Err(MraError::InvalidParameter(
            "all-zero power spectrum is infeasible for positive sparsity".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut x: Vec<T> = (0..len).map(|_| T::cast(rng.gen_range(0.0..1.0))).collect();
    let mut workspace = FftWorkspace::new(len);

    let mut last_residual = T::infinity();
    let mut last_binary = project_sparsity(&x, sparsity);
    for iteration in 1..=config.max_iter {
        let binary = project_sparsity(&x, sparsity);
        let residual = power_spectrum_residual_with(&mut workspace, &binary, ps);
        if residual < config.tol {
            return Ok(RrrResult {
                estimate: SparseSignal::from_values(binary)?,
                iterations: iteration,
                converged: true,
                final_residual: residual,
            });
        }
        last_residual = residual;
        // Reflect through the sparsity projection, project the reflection
        // onto the spectrum set, and relax.
        let reflected: Vec<T> = binary
            .iter()
            .zip(&x)
            .map(|(&b, &v)| b + b - v)
            .collect();
        let spectral = project_power_spectrum_with(&mut workspace, &reflected, ps);
        for ((v, &s), &b) in x.iter_mut().zip(&spectral).zip(&binary) {
            *v += config.beta * (s - b);
        }
        last_binary = binary;
    }

    Ok(RrrResult {
        estimate: SparseSignal::from_values(last_binary)?,
        iterations: config.max_iter,
        converged: false,
        final_residual: last_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::power_spectrum;
    use crate::orbit::align_to_orbit;
    use crate::signal::SparseSignal;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sparsity_projection_keeps_largest_entries() {
        let x = [0.9, 0.2, 0.95, -1.0];
        assert_eq!(project_sparsity(&x, 2), vec![1.0, 0.0, 1.0, 0.0]);
        assert_eq!(project_sparsity(&x, 0), vec![0.0; 4]);
        assert_eq!(project_sparsity(&x, 4), vec![1.0; 4]);
    }

    #[test]
    fn sparsity_projection_breaks_ties_toward_low_indices() {
        let x = [0.5, 0.5, 0.1];
        assert_eq!(project_sparsity(&x, 1), vec![1.0, 0.0, 0.0]);
        assert_eq!(project_sparsity(&x, 2), vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn sparsity_projection_is_idempotent() {
        let x = [0.3, -0.2, 0.8, 0.1, 0.9];
        let once = project_sparsity(&x, 3);
        let twice = project_sparsity(&once, 3);
        assert_eq!(once, twice);
    }

    #[test]
    fn spectrum_projection_achieves_target_spectrum() {
        let target = SparseSignal::<f64>::from_support(9, &[0, 2, 3]).unwrap();
        let ps = power_spectrum(target.values());
        let x = [0.1, -0.4, 0.9, 0.2, 0.0, 0.7, -0.3, 0.5, 0.25];
        let projected = project_power_spectrum(&x, &ps);
        let achieved = power_spectrum(&projected);
        for (a, b) in achieved.iter().zip(&ps) {
            assert!((a - b).abs() < 1e-9, "achieved {a} target {b}");
        }
    }

    #[test]
    fn spectrum_projection_is_idempotent() {
        let target = SparseSignal::<f64>::from_support(8, &[1, 4, 5]).unwrap();
        let ps = power_spectrum(target.values());
        let x = [0.6, -0.1, 0.3, 0.8, 0.2, -0.5, 0.0, 0.4];
        let once = project_power_spectrum(&x, &ps);
        let twice = project_power_spectrum(&once, &ps);
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn spectrum_projection_defaults_phase_to_one_and_clamps_negatives() {
        // From the zero vector every coefficient has negligible magnitude,
        // so the projection is the inverse DFT of sqrt(ps) with phase 1.
        let ps = [9.0f64, 4.0, -0.5, 4.0];
        let projected = project_power_spectrum(&[0.0; 4], &ps);
        // Expected spectrum [3, 2, 0, 2] (negative entry clamped):
        // idft = [7/4, 3/4, -1/4, 3/4].
        let expected = [1.75, 0.75, -0.25, 0.75];
        for (a, b) in projected.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "projected {a} expected {b}");
        }
    }

    #[test]
    fn feasible_point_has_zero_increment() {
        let signal = SparseSignal::<f64>::from_support(10, &[0, 1, 5, 7]).unwrap();
        let ps = power_spectrum(signal.values());
        let x = signal.values().to_vec();
        let binary = project_sparsity(&x, 4);
        assert_eq!(binary, x);
        let reflected: Vec<f64> = binary.iter().zip(&x).map(|(&b, &v)| b + b - v).collect();
        let spectral = project_power_spectrum(&reflected, &ps);
        for (s, b) in spectral.iter().zip(&binary) {
            assert!((s - b).abs() < 1e-9, "increment {}", s - b);
        }
    }

    #[test]
    fn unit_relaxation_is_douglas_rachford_for_one_step() {
        // One RRR step at beta = 1 equals one Douglas-Rachford step
        // x <- (x + R_B(R_A(x))) / 2 coded through reflections.
        let target = SparseSignal::<f64>::from_support(16, &[0, 3, 4, 9, 11]).unwrap();
        let ps = power_spectrum(target.values());
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let x: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..2.0)).collect();

            let pa = project_sparsity(&x, 5);
            let relaxed: Vec<f64> = x
                .iter()
                .zip(&pa)
                .zip(project_power_spectrum(
                    &x.iter().zip(&pa).map(|(&v, &b)| b + b - v).collect::<Vec<_>>(),
                    &ps,
                ))
                .map(|((&v, &b), s)| v + (s - b))
                .collect();

            let ra: Vec<f64> = pa.iter().zip(&x).map(|(&b, &v)| b + b - v).collect();
            let pb = project_power_spectrum(&ra, &ps);
            let rb: Vec<f64> = pb.iter().zip(&ra).map(|(&p, &r)| p + p - r).collect();
            let dr: Vec<f64> = x.iter().zip(&rb).map(|(&v, &r)| (v + r) / 2.0).collect();

            for (a, b) in relaxed.iter().zip(&dr) {
                assert!((a - b).abs() < 1e-10, "relaxed {a} vs dr {b}");
            }
        }
    }

    #[test]
    fn solver_at_unit_beta_tracks_reflection_coded_trajectory() {
        // Replicate rrr_solve's initialization and step the reflection-coded
        // Douglas-Rachford recursion; after the same number of iterations the
        // binarized iterates must agree.
        let target = SparseSignal::<f64>::from_support(12, &[2, 5, 6]).unwrap();
        let ps = power_spectrum(target.values());
        let seed = 7;
        let iters = 4;
        let config = RrrConfig { beta: 1.0, tol: 1e-30, max_iter: iters, seed };
        let result = rrr_solve(&ps, 3, &config).unwrap();
        assert!(!result.converged);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x: Vec<f64> = (0..12).map(|_| rng.gen_range(0.0..1.0)).collect();
        // rrr_solve returns the binarization observed at iteration
        // `max_iter`, i.e. after max_iter - 1 updates.
        for _ in 0..iters - 1 {
            let pa = project_sparsity(&x, 3);
            let ra: Vec<f64> = pa.iter().zip(&x).map(|(&b, &v)| b + b - v).collect();
            let pb = project_power_spectrum(&ra, &ps);
            let rb: Vec<f64> = pb.iter().zip(&ra).map(|(&p, &r)| p + p - r).collect();
            x = x.iter().zip(&rb).map(|(&v, &r)| (v + r) / 2.0).collect();
        }
        let expected = project_sparsity(&x, 3);
        assert_eq!(result.estimate.values(), &expected[..]);
    }

    #[test]
    fn recovers_tiny_instance_up_to_symmetry() {
        let truth = SparseSignal::<f64>::from_support(12, &[0, 5]).unwrap();
        let ps = power_spectrum(truth.values());
        let config = RrrConfig { seed: 3, ..RrrConfig::default() };
        let result = rrr_solve(&ps, 2, &config).unwrap();
        assert!(result.converged, "failed to converge: {result:?}");
        assert!(result.final_residual < 1e-5);
        let err = align_to_orbit(result.estimate.values(), truth.values(), true).unwrap();
        assert!(err.relative_error < 1e-6, "orbit error {}", err.relative_error);
    }

    #[test]
    fn repeat_runs_are_identical() {
        let truth = SparseSignal::<f64>::from_support(20, &[0, 1, 7, 11]).unwrap();
        let ps = power_spectrum(truth.values());
        let config = RrrConfig { seed: 11, ..RrrConfig::default() };
        let a = rrr_solve(&ps, 4, &config).unwrap();
        let b = rrr_solve(&ps, 4, &config).unwrap();
        assert_eq!(a.estimate.values(), b.estimate.values());
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.final_residual, b.final_residual);
    }

    #[test]
    fn different_seeds_explore_different_starts() {
        let truth = SparseSignal::<f64>::from_support(20, &[0, 2, 9, 13, 14]).unwrap();
        let ps = power_spectrum(truth.values());
        let a = rrr_solve(&ps, 5, &RrrConfig { seed: 1, ..RrrConfig::default() }).unwrap();
        let b = rrr_solve(&ps, 5, &RrrConfig { seed: 2, ..RrrConfig::default() }).unwrap();
        // Both converge to valid solutions, generally after different
        // iteration counts.
        assert!(a.converged && b.converged);
        assert!(a.iterations != b.iterations || a.estimate == b.estimate);
    }

    #[test]
    fn parameter_validation() {
        let ps = [4.0, 1.0, 1.0, 1.0];
        assert!(rrr_solve(&ps, 5, &RrrConfig::default()).is_err());
        assert!(rrr_solve::<f64>(&[], 0, &RrrConfig::default()).is_err());
        let bad_beta = RrrConfig { beta: 2.0, ..RrrConfig::default() };
        assert!(rrr_solve(&ps, 2, &bad_beta).is_err());
        let bad_tol = RrrConfig { tol: 0.0, ..RrrConfig::default() };
        assert!(rrr_solve(&ps, 2, &bad_tol).is_err());
        let bad_cap = RrrConfig { max_iter: 0, ..RrrConfig::default() };
        assert!(rrr_solve(&ps, 2, &bad_cap).is_err());
    }

    #[test]
    fn zero_spectrum_is_trivial_or_infeasible() {
        let zeros = [0.0; 6];
        let trivial = rrr_solve(&zeros, 0, &RrrConfig::default()).unwrap();
        assert!(trivial.converged);
        assert_eq!(trivial.iterations, 1);
        assert_eq!(trivial.estimate.sparsity(), 0);
        assert!(rrr_solve(&zeros, 2, &RrrConfig::default()).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let truth = SparseSignal::<f32>::from_support(10, &[0, 4]).unwrap();
        let ps = power_spectrum(truth.values());
        let config = RrrConfig::<f32> { tol: 1e-3, ..RrrConfig::default() };
        let result = rrr_solve(&ps, 2, &config).unwrap();
        assert!(result.converged);
    }
}
