//! Expectation-maximization over the unknown shifts.
//!
//! Treating each observation's shift as a latent variable, the E-step
//! computes posterior shift weights for the current iterate `x`,
//!
//! ```text
//! w_i[s] ∝ exp( -||y_i - shift(x, s)||^2 / (2 sigma^2) ),
//! ```
//!
//! and the M-step averages the observations unshifted by those weights. A
//! Bernoulli(q) prior on the entries adds the constant
//! `(2 sigma^2 / n) * ln(q / (1 - q))` to every coordinate of the update.
//! Iteration stops when consecutive iterates move less than `tol` in L2.
//!
//! Both steps run in the frequency domain: the distances reduce to circular
//! cross-correlations, and the weighted back-shifted average of `y` is
//! `idft(dft(y) * conj(dft(w)))`, so one iteration costs `O(n L log L)`.

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{MraError, Result};
use crate::fft::FftWorkspace;
use crate::rng::substream;
use crate::scalar::Scalar;
use crate::signal::{ObservationSet, SparseSignal};

/// Observations per parallel chunk; fixed so that accumulation order (and
/// thus rounding) never depends on the thread count.
const EM_CHUNK: usize = 256;

/// Tuning knobs for [`em_solve`].
#[derive(Debug, Clone)]
pub struct EmConfig<T: Scalar> {
    /// Bernoulli prior parameter, in `(0, 1)`. `0.5` makes the prior term
    /// vanish.
    pub q: T,
    /// Convergence threshold on `||x_next - x||_2`.
    pub tol: T,
    /// Iteration cap per restart.
    pub max_iter: usize,
    /// Seed for the random starting points.
    pub seed: u64,
    /// Number of independent restarts; the best by posterior score wins.
    pub restarts: usize,
}

impl<T: Scalar> Default for EmConfig<T> {
    fn default() -> Self {
        EmConfig {
            q: T::cast(0.5),
            tol: T::cast(1e-7),
            max_iter: 10_000,
            seed: 0,
            restarts: 1,
        }
    }
}

/// Outcome of an EM run.
#[derive(Debug, Clone)]
pub struct EmResult<T: Scalar> {
    /// Final continuous iterate (not binarized).
    pub continuous: Vec<T>,
    /// Continuous iterate thresholded at 1/2.
    pub estimate: SparseSignal<T>,
    /// Iterations used by the winning restart.
    pub iterations: usize,
    /// Whether the winning restart met the tolerance before the cap.
    pub converged: bool,
    /// `||x_{t+1} - x_t||_2` per iteration of the winning restart.
    pub delta_trace: Vec<T>,
    /// Posterior score (up to a constant) used to rank restarts.
    pub score: T,
}

/// Posterior shift weights of one observation given the iterate `x`.
///
/// Returns a nonnegative vector summing to one. With `x = 0` (or any `x`
/// equidistant from all shifts) the weights are uniform.
pub fn em_weights<T: Scalar>(y: &[T], x: &[T], sigma: T) -> Result<Vec<T>> {
    if y.len() != x.len() {
        return Err(MraError::InvalidParameter(
            "observation and iterate lengths differ".into(),
        ));
    }
    if !(sigma > T::zero()) {
        return Err(MraError::InvalidParameter("sigma must be positive".into()));
    }
    let mut workspace = FftWorkspace::new(y.len());
    let correlations = workspace.cross_correlation(y, x);
    let x_norm_sq: T = x.iter().map(|&v| v * v).sum();
    Ok(weights_from_correlations(&correlations, x_norm_sq, sigma).0)
}

/// Softmax of `(c[s] - ||x||^2 / 2) / sigma^2` over shifts; the constant
/// `-||y||^2 / (2 sigma^2)` cancels in the normalization. Also returns the
/// log-normalizer (relative to the dropped constant) for scoring.
fn weights_from_correlations<T: Scalar>(
    correlations: &[T],
    x_norm_sq: T,
    sigma: T,
) -> (Vec<T>, T) {
    let inv_var = T::one() / (sigma * sigma);
    let half = T::cast(0.5);
    let logits: Vec<T> = correlations
        .iter()
        .map(|&c| (c - half * x_norm_sq) * inv_var)
        .collect();
    let peak = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let mut weights: Vec<T> = logits.iter().map(|&a| (a - peak).exp()).collect();
    let total: T = weights.iter().copied().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    (weights, peak + total.ln())
}

/// One EM iteration from `x`, using every observation. Exposed for testing
/// and diagnostics; [`em_solve`] runs the full loop.
pub fn em_update<T: Scalar>(
    x: &[T],
    observations: &ObservationSet<T>,
    sigma: T,
    config: &EmConfig<T>,
) -> Result<Vec<T>> {
    validate(observations, sigma, config)?;
    if x.len() != observations.len() {
        return Err(MraError::InvalidParameter(
            "iterate length must match observation length".into(),
        ));
    }
    let spectra = observation_spectra(observations);
    let (next, _) = em_step(x, &spectra, observations.num_observations(), sigma, config);
    Ok(next)
}

/// Run EM to convergence (or the cap) from `config.restarts` random starts,
/// returning the restart with the best posterior score.
pub fn em_solve<T: Scalar>(
    observations: &ObservationSet<T>,
    sigma: T,
    config: &EmConfig<T>,
) -> Result<EmResult<T>> {
    validate(observations, sigma, config)?;
    let len = observations.len();
    let spectra = observation_spectra(observations);
    let n = observations.num_observations();

    let mut best: Option<EmResult<T>> = None;
    for restart in 0..config.restarts {
        let mut rng = substream(config.seed, restart as u64);
        let mut x: Vec<T> = (0..len).map(|_| T::cast(rng.gen_range(0.0..1.0))).collect();
        let mut delta_trace = Vec::new();
        let mut converged = false;
        let mut score = T::neg_infinity();
        let mut iterations = 0;
        for _ in 0..config.max_iter {
            let (next, log_post) = em_step(&x, &spectra, n, sigma, config);
            iterations += 1;
            score = log_post;
            let delta: T = x
                .iter()
                .zip(&next)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<T>()
                .sqrt();
            delta_trace.push(delta);
            x = next;
            if delta < config.tol {
                converged = true;
                break;
            }
        }
        let estimate = SparseSignal::from_thresholded(&x);
        let candidate = EmResult {
            continuous: x,
            estimate,
            iterations,
            converged,
            delta_trace,
            score,
        };
        let better = match &best {
            None => true,
            Some(current) => candidate.score > current.score,
        };
        if better {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn validate<T: Scalar>(
    observations: &ObservationSet<T>,
    sigma: T,
    config: &EmConfig<T>,
) -> Result<()> {
    if observations.num_observations() == 0 {
        return Err(MraError::InvalidParameter(
            "EM needs at least one observation".into(),
        ));
    }
    if !(sigma > T::zero()) {
        return Err(MraError::InvalidParameter("sigma must be positive".into()));
    }
    if !(config.q > T::zero() && config.q < T::one()) {
        return Err(MraError::InvalidParameter("q must lie in (0, 1)".into()));
    }
    if !(config.tol > T::zero()) {
        return Err(MraError::InvalidParameter("tol must be positive".into()));
    }
    if config.max_iter == 0 || config.restarts == 0 {
        return Err(MraError::InvalidParameter(
            "max_iter and restarts must be at least 1".into(),
        ));
    }
    Ok(())
}

/// Precompute observation DFTs once; every EM iteration reuses them.
fn observation_spectra<T: Scalar>(observations: &ObservationSet<T>) -> Vec<Vec<Complex<T>>> {
    let len = observations.len();
    observations
        .observations()
        .par_chunks(EM_CHUNK)
        .map(|chunk| {
            let mut workspace = FftWorkspace::new(len);
            chunk.iter().map(|y| workspace.dft(y)).collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// One EM iteration in the frequency domain. Returns the next iterate and
/// the total log-posterior score (up to additive constants shared by all
/// iterates on the same data).
fn em_step<T: Scalar>(
    x: &[T],
    spectra: &[Vec<Complex<T>>],
    n: usize,
    sigma: T,
    config: &EmConfig<T>,
) -> (Vec<T>, T) {
    let len = x.len();
    let x_spectrum = crate::fft::dft(x);
    let x_norm_sq: T = x.iter().map(|&v| v * v).sum();

    // Per-chunk partial sums merged in fixed chunk order for determinism.
    let partials: Vec<(Vec<Complex<T>>, T)> = spectra
        .par_chunks(EM_CHUNK)
        .map(|chunk| {
            let mut workspace = FftWorkspace::new(len);
            let mut acc = vec![Complex::new(T::zero(), T::zero()); len];
            let mut log_post = T::zero();
            for y_spectrum in chunk {
                let prod: Vec<Complex<T>> = y_spectrum
                    .iter()
                    .zip(&x_spectrum)
                    .map(|(y, xs)| y * xs.conj())
                    .collect();
                let correlations = workspace.idft_real(&prod);
                let (weights, log_norm) =
                    weights_from_correlations(&correlations, x_norm_sq, sigma);
                log_post += log_norm;
                let w_spectrum = workspace.dft(&weights);
                for ((a, y), w) in acc.iter_mut().zip(y_spectrum).zip(&w_spectrum) {
                    *a += y * w.conj();
                }
            }
            (acc, log_post)
        })
        .collect();

    let mut acc = vec![Complex::new(T::zero(), T::zero()); len];
    let mut log_post = T::zero();
    for (partial, lp) in partials {
        for (a, p) in acc.iter_mut().zip(partial) {
            *a += p;
        }
        log_post += lp;
    }

    let mut workspace = FftWorkspace::new(len);
    let n_t = T::cast(n as f64);
    let mut next = workspace.idft_real(&acc);
    // Bernoulli prior: a constant offset on every coordinate. At q = 1/2
    // the log-odds vanish and the update is the plain weighted average.
    let log_odds = (config.q / (T::one() - config.q)).ln();
    let prior = T::cast(2.0) * sigma * sigma / n_t * log_odds;
    for v in next.iter_mut() {
        *v = *v / n_t + prior;
    }

    // Score the *input* iterate: data log-likelihood plus the prior's
    // interaction term ln(q/(1-q)) * sum(x).
    let x_sum: T = x.iter().copied().sum();
    let score = log_post + log_odds * x_sum;
    (next, score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::align_to_orbit;
    use crate::signal::{circular_shift, generate_observations, AtomProfile, SparseSignal};
    use proptest::prelude::*;

    fn delta_atom(len: usize) -> AtomProfile<f64> {
        AtomProfile::delta(len)
    }

    #[test]
    fn weights_are_uniform_for_zero_iterate() {
        let y = [0.4f64, -0.2, 1.0, 0.7, 0.0];
        let w = em_weights(&y, &[0.0; 5], 1.0).unwrap();
        for &v in &w {
            assert!((v - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_concentrate_on_the_true_shift_at_low_noise() {
        let x = SparseSignal::<f64>::from_support(7, &[0, 1, 3]).unwrap();
        let y = circular_shift(x.values(), 3);
        let w = em_weights(&y, x.values(), 1e-3).unwrap();
        assert!(w[3] > 1.0 - 1e-9, "w[3] = {}", w[3]);
    }

    #[test]
    fn weights_match_direct_distance_computation() {
        let x = [0.9, 0.1, -0.4, 0.6, 0.2, 0.0];
        let y = [0.3, 1.1, -0.2, 0.5, 0.7, -0.9];
        let sigma = 0.8;
        let fast = em_weights(&y, &x, sigma).unwrap();
        // Direct softmax over -||y - shift(x, s)||^2 / (2 sigma^2).
        let logits: Vec<f64> = (0..6)
            .map(|s| {
                let shifted = circular_shift(&x, s as i64);
                let d: f64 = y.iter().zip(&shifted).map(|(a, b)| (a - b) * (a - b)).sum();
                -d / (2.0 * sigma * sigma)
            })
            .collect();
        let peak = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|&a| (a - peak).exp()).collect();
        let total: f64 = exps.iter().sum();
        for (a, b) in fast.iter().zip(exps.iter().map(|&e| e / total)) {
            assert!((a - b).abs() < 1e-10, "fast {a} direct {b}");
        }
    }

    #[test]
    fn update_from_zero_iterate_is_grand_mean_plus_prior() {
        // With uniform weights the update averages all observations over all
        // shifts, i.e. every coordinate becomes the grand sample mean, plus
        // the prior constant.
        let signal = SparseSignal::<f64>::from_support(8, &[0, 3, 4]).unwrap();
        let obs = generate_observations(&signal, &delta_atom(8), 50, 0.5, 9);
        let config = EmConfig { q: 0.3, ..EmConfig::default() };
        let next = em_update(&[0.0; 8], &obs, 0.5, &config).unwrap();

        let n = obs.num_observations() as f64;
        let grand_mean: f64 = obs
            .observations()
            .iter()
            .flat_map(|y| y.iter())
            .sum::<f64>()
            / (n * 8.0);
        let prior = 2.0 * 0.25 / n * (0.3f64 / 0.7).ln();
        for &v in &next {
            assert!((v - (grand_mean + prior)).abs() < 1e-10, "entry {v}");
        }
    }

    #[test]
    fn update_matches_direct_double_sum() {
        let signal = SparseSignal::<f64>::from_support(6, &[1, 4]).unwrap();
        let obs = generate_observations(&signal, &delta_atom(6), 12, 0.7, 4);
        let x = [0.4, 0.8, 0.1, 0.0, 0.9, 0.3];
        let sigma = 0.7;
        let config = EmConfig { q: 0.4, ..EmConfig::default() };
        let fast = em_update(&x, &obs, sigma, &config).unwrap();

        // Direct computation: average of back-shifted observations weighted
        // by posterior shift weights, plus the prior constant.
        let n = obs.num_observations();
        let mut direct = vec![0.0f64; 6];
        for y in obs.observations() {
            let w = em_weights(y, &x, sigma).unwrap();
            for s in 0..6 {
                let back = circular_shift(y, -(s as i64));
                for (d, &b) in direct.iter_mut().zip(&back) {
                    *d += w[s] * b / n as f64;
                }
            }
        }
        let prior = 2.0 * sigma * sigma / n as f64 * (0.4f64 / 0.6).ln();
        for d in direct.iter_mut() {
            *d += prior;
        }
        for (a, b) in fast.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-10, "fast {a} direct {b}");
        }
    }

    #[test]
    fn neutral_prior_and_tiny_noise_make_truth_a_fixed_point() {
        // With noiseless observations, q = 1/2, and sigma small enough that
        // the weights are numerically one-hot, the truth maps to itself.
        let signal = SparseSignal::<f64>::from_support(9, &[0, 1, 5]).unwrap();
        let obs = generate_observations(&signal, &delta_atom(9), 30, 0.0, 2);
        let config = EmConfig { q: 0.5, ..EmConfig::default() };
        let next = em_update(signal.values(), &obs, 0.05, &config).unwrap();
        for (a, b) in next.iter().zip(signal.values()) {
            assert!((a - b).abs() < 1e-9, "next {a} truth {b}");
        }
    }

    #[test]
    fn single_observation_low_noise_recovers_its_shift() {
        let signal = SparseSignal::<f64>::from_support(8, &[0, 2, 3]).unwrap();
        let y = circular_shift(signal.values(), 5);
        let obs = ObservationSet::new(8, 0.05, vec![y.clone()], vec![5], 0).unwrap();
        let next = em_update(signal.values(), &obs, 0.05, &EmConfig::default()).unwrap();
        // The single observation is back-shifted onto the signal.
        for (a, b) in next.iter().zip(signal.values()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn update_is_shift_equivariant() {
        // Shifting every observation by a common offset shifts the update.
        let signal = SparseSignal::<f64>::from_support(10, &[0, 3, 4]).unwrap();
        let obs = generate_observations(&signal, &delta_atom(10), 20, 0.4, 8);
        let x = [0.2, 0.7, 0.05, 0.4, 0.9, 0.1, 0.3, 0.6, 0.0, 0.8];
        let base = em_update(&x, &obs, 0.4, &EmConfig::default()).unwrap();

        let shifted_rows: Vec<Vec<f64>> = obs
            .observations()
            .iter()
            .map(|y| circular_shift(y, 4))
            .collect();
        let shifted_shifts: Vec<usize> =
            obs.true_shifts().iter().map(|&s| (s + 4) % 10).collect();
        let shifted_obs =
            ObservationSet::new(10, 0.4, shifted_rows, shifted_shifts, 0).unwrap();
        let shifted_x = circular_shift(&x, 4);
        let moved = em_update(&shifted_x, &shifted_obs, 0.4, &EmConfig::default()).unwrap();
        let expected = circular_shift(&base, 4);
        for (a, b) in moved.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn solves_low_noise_instance() {
        let signal = SparseSignal::<f64>::from_support(20, &[0, 2, 7, 15]).unwrap();
        let obs = generate_observations(&signal, &delta_atom(20), 400, 0.1, 31);
        let result = em_solve(&obs, 0.1, &EmConfig::default()).unwrap();
        assert!(result.converged, "no convergence after {} iters", result.iterations);
        let err = align_to_orbit(result.estimate.values(), signal.values(), false).unwrap();
        assert!(err.relative_error < 1e-6, "orbit error {}", err.relative_error);
        // Deltas shrink overall; compare first and last.
        let first = result.delta_trace.first().unwrap();
        let last = result.delta_trace.last().unwrap();
        assert!(last < first);
    }

    #[test]
    fn restarts_pick_the_better_score() {
        let signal = SparseSignal::<f64>::from_support(16, &[0, 1, 6, 11]).unwrap();
        let obs = generate_observations(&signal, &delta_atom(16), 300, 0.8, 13);
        let single = em_solve(&obs, 0.8, &EmConfig { seed: 5, ..EmConfig::default() }).unwrap();
        let multi = em_solve(
            &obs,
            0.8,
            &EmConfig { seed: 5, restarts: 4, ..EmConfig::default() },
        )
        .unwrap();
        // More restarts can only improve (or match) the score, since restart
        // 0 reproduces the single run.
        assert!(multi.score >= single.score);
    }

    #[test]
    fn repeat_runs_are_identical() {
        let signal = SparseSignal::<f64>::from_support(12, &[0, 4, 5]).unwrap();
        let obs = generate_observations(&signal, &delta_atom(12), 200, 1.0, 3);
        let config = EmConfig { restarts: 2, ..EmConfig::default() };
        let a = em_solve(&obs, 1.0, &config).unwrap();
        let b = em_solve(&obs, 1.0, &config).unwrap();
        assert_eq!(a.continuous, b.continuous);
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.score, b.score);
    }

    #[test]
    fn parameter_validation() {
        let signal = SparseSignal::<f64>::from_support(6, &[0]).unwrap();
        let obs = generate_observations(&signal, &delta_atom(6), 5, 0.5, 0);
        assert!(em_solve(&obs, 0.0, &EmConfig::default()).is_err());
        assert!(em_solve(&obs, 0.5, &EmConfig { q: 0.0, ..EmConfig::default() }).is_err());
        assert!(em_solve(&obs, 0.5, &EmConfig { q: 1.0, ..EmConfig::default() }).is_err());
        assert!(em_solve(&obs, 0.5, &EmConfig { tol: 0.0, ..EmConfig::default() }).is_err());
        assert!(em_solve(&obs, 0.5, &EmConfig { max_iter: 0, ..EmConfig::default() }).is_err());
        let empty = ObservationSet::<f64>::new(6, 0.5, vec![], vec![], 0).unwrap();
        assert!(em_solve(&empty, 0.5, &EmConfig::default()).is_err());
        assert!(em_weights(&[0.0; 4], &[0.0; 5], 1.0).is_err());
    }

    proptest! {
        #[test]
        fn weights_always_normalize(
            seed in 0u64..500,
            sigma in 0.05f64..3.0,
        ) {
            let mut rng = crate::rng::substream(seed, 0);
            let y: Vec<f64> =
                (0..9).map(|_| rand::Rng::gen_range(&mut rng, -2.0..2.0)).collect();
            let x: Vec<f64> =
                (0..9).map(|_| rand::Rng::gen_range(&mut rng, -2.0..2.0)).collect();
            let w = em_weights(&y, &x, sigma).unwrap();
            let total: f64 = w.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(w.iter().all(|&v| v >= 0.0));
        }
    }
}
