//! Convex lifted relaxation for power-spectrum feasibility.
//!
//! The binary signal `x` is lifted to `X = x x^T` (after shifting `x` so
//! that `x[0] = 1`, always possible for a nonzero binary signal). The
//! feasible region relaxes the rank-1 constraint and keeps everything
//! convex:
//!
//! * `X` positive semidefinite,
//! * `trace(F_i X) = ps[i]` where `Re(F_i)[a, b] = cos(2 pi i (a - b) / L)`
//!   (these encode `|X_hat[i]|^2` — the imaginary part of the Fourier outer
//!   product is antisymmetric and vanishes against symmetric `X`),
//! * `X[i, i] = X[0, i]` (binary diagonals: `x_i^2 = x_i = x_0 x_i`),
//! * `X[0, 0] = 1` (gauge),
//! * `X >= 0` entrywise.
//!
//! A generic linear objective `<R, X>` with random symmetric `R` makes the
//! optimum an extreme point, which for generic instances is the rank-1 lift
//! of a true solution. The solver is a splitting method: alternate a PSD
//! projection step (which also absorbs the linear objective) with a
//! projection onto the affine-and-nonnegative set computed by Dykstra's
//! algorithm, coupled through scaled dual updates. Success is judged by the
//! worst constraint residual of the PSD iterate; a rank-1 certificate and
//! signal extraction follow separately.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{MraError, Result};
use crate::linalg::{symmetric_eigen, SymmetricEigen};
use crate::scalar::Scalar;
use crate::signal::SparseSignal;

/// Entries of an estimated power spectrum below `-PS_CLIP` are data errors;
/// anything in `[-PS_CLIP, 0)` is clipped to zero.
const PS_CLIP: f64 = 1e-6;
/// Eigenvalue threshold (relative to the largest) below which Gram-matrix
/// directions are treated as null space in the pseudoinverse.
const GRAM_NULL_EPS: f64 = 1e-12;
/// Leading-eigenvector gauge entries below this modulus cannot be rescaled.
const EXTRACT_GAUGE_EPS: f64 = 1e-6;
/// Power-spectrum relative error below which an extracted signal counts as
/// verified.
const EXTRACT_VERIFY_TOL: f64 = 1e-6;
/// Iterations between infeasibility checks.
const STALL_WINDOW: usize = 2000;
/// Residual level above which a stalled run may be flagged infeasible.
const STALL_RESIDUAL: f64 = 1e-3;
/// Growth factor of the (unscaled) dual norm across a stall window that
/// counts as divergence. On feasible problems the duals converge; on
/// infeasible ones they grow without bound, so sustained growth separates
/// "infeasible" from merely "slow".
const DUAL_GROWTH: f64 = 1.2;

/// Tuning knobs for [`solve_sdp`].
#[derive(Debug, Clone)]
pub struct SdpConfig<T: Scalar> {
    /// Absolute tolerance on the worst constraint residual.
    pub tol: T,
    /// Outer (splitting) iteration cap.
    pub max_outer: usize,
    /// Inner (Dykstra) iteration cap per outer iteration.
    pub max_inner: usize,
    /// Initial augmented-Lagrangian weight; adapted during the run.
    pub rho: T,
}

impl<T: Scalar> Default for SdpConfig<T> {
    fn default() -> Self {
        SdpConfig {
            tol: T::cast(1e-6),
            max_outer: 50_000,
            // The outer loop is only as accurate as the inner projection it
            // is handed, so the inner cap must be deep enough for hard
            // (thin-intersection) instances; the early exit below keeps the
            // typical cost far lower than the cap.
            max_inner: 2000,
            rho: T::one(),
        }
    }
}

/// A lifted feasibility problem: target power spectrum plus the random
/// symmetric objective that selects an extreme point.
#[derive(Debug, Clone)]
pub struct SdpProblem<T: Scalar> {
    len: usize,
    ps: Vec<T>,
    objective: Vec<T>,
    seed: u64,
}

impl<T: Scalar> SdpProblem<T> {
    /// Signal length `L` (the lifted matrix is `L x L`).
    pub fn len(&self) -> usize {
        self.len
    }

    /// True when the problem is empty (never, for validated inputs).
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Target power spectrum (clipped and symmetrized).
    pub fn ps(&self) -> &[T] {
        &self.ps
    }

    /// Random symmetric objective matrix `R`, row-major.
    pub fn objective(&self) -> &[T] {
        &self.objective
    }

    /// Seed the objective was drawn from.
    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Per-constraint violation magnitudes of a candidate matrix.
#[derive(Debug, Clone)]
pub struct SdpResiduals<T: Scalar> {
    /// `|trace(F_i X) - ps[i]|` per frequency.
    pub trace: Vec<T>,
    /// `|X[i, i] - X[0, i]|` for `i = 1..L`.
    pub diagonal: Vec<T>,
    /// `|X[0, 0] - 1|`.
    pub gauge: T,
    /// `max(0, -min_entry(X))`.
    pub negativity: T,
    /// `max |X - Z|` between the two splitting iterates.
    pub splitting: T,
}

impl<T: Scalar> SdpResiduals<T> {
    /// Worst violation across all constraint families.
    pub fn max(&self) -> T {
        let mut worst = self.gauge.max(self.negativity).max(self.splitting);
        for &v in &self.trace {
            worst = worst.max(v);
        }
        for &v in &self.diagonal {
            worst = worst.max(v);
        }
        worst
    }
}

/// Outcome of a lifted solve.
#[derive(Debug, Clone)]
pub struct SdpSolution<T: Scalar> {
    /// PSD iterate at termination, row-major `L x L`.
    pub x_opt: Vec<T>,
    /// `<R, X>` at termination.
    pub objective_value: T,
    /// Constraint residuals of `x_opt`.
    pub residuals: SdpResiduals<T>,
    /// Eigenvalues of `x_opt`, descending.
    pub eigenvalues: Vec<T>,
    /// `1 - lambda_max / sum(max(lambda_i, 0))`: zero for exactly rank-1.
    pub rank1_gap: T,
    /// Outer iterations used.
    pub iterations: usize,
    /// Whether the residual tolerance was met.
    pub converged: bool,
    /// Heuristic flag: residuals plateaued well above tolerance, suggesting
    /// an infeasible (e.g. corrupted) target spectrum.
    pub infeasible: bool,
    /// Target spectrum, kept for extraction-time verification.
    pub ps: Vec<T>,
}

/// An extracted signal candidate with its certificate.
#[derive(Debug, Clone)]
pub struct SdpExtraction<T: Scalar> {
    /// Thresholded binary candidate.
    pub estimate: SparseSignal<T>,
    /// Leading eigenvector rescaled to gauge entry 1 (before thresholding).
    pub rescaled_eigenvector: Vec<T>,
    /// Relative power-spectrum error of the thresholded candidate.
    pub ps_relative_error: T,
    /// True when the candidate reproduces the target spectrum to tolerance.
    pub verified: bool,
}

/// Build a lifted problem from a target power spectrum. The spectrum must
/// have `ps[0] >= 1` (a nonzero binary signal) and no entries below the
/// clipping tolerance; small negatives are clipped, and the vector is
/// symmetrized. `seed` draws the random objective.
pub fn build_sdp<T: Scalar>(ps: &[T], seed: u64) -> Result<SdpProblem<T>> {
    let len = ps.len();
    if len < 2 {
        return Err(MraError::InvalidParameter(
            "lifted problems need length at least 2".into(),
        ));
    }
    let clip = T::cast(PS_CLIP);
    let mut cleaned: Vec<T> = Vec::with_capacity(len);
    for (k, &p) in ps.iter().enumerate() {
        if p < -clip {
            return Err(MraError::InvalidParameter(format!(
                "power spectrum entry {k} is {p}, below the clipping tolerance"
            )));
        }
        cleaned.push(if p > T::zero() { p } else { T::zero() });
    }
    if cleaned[0] < T::one() - clip {
        return Err(MraError::InvalidParameter(
            "ps[0] must be at least 1 (nonzero binary signal)".into(),
        ));
    }
    for k in 1..=(len - 1) / 2 {
        let avg = (cleaned[k] + cleaned[len - k]) / T::cast(2.0);
        cleaned[k] = avg;
        cleaned[len - k] = avg;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut objective = vec![T::zero(); len * len];
    for v in objective.iter_mut() {
        let draw: f64 = StandardNormal.sample(&mut rng);
        *v = T::cast(draw);
    }
    for i in 0..len {
        for j in (i + 1)..len {
            let avg = (objective[i * len + j] + objective[j * len + i]) / T::cast(2.0);
            objective[i * len + j] = avg;
            objective[j * len + i] = avg;
        }
    }
    Ok(SdpProblem { len, ps: cleaned, objective, seed })
}

/// Worst lift-constraint violation of the rank-1 lift of `x` against `ps`.
/// Finite-precision check that true signals (gauged so `x[0] = 1`) are
/// feasible.
pub fn lift_residual<T: Scalar>(x: &[T], ps: &[T]) -> T {
    let len = x.len();
    assert_eq!(ps.len(), len, "spectrum length mismatch");
    let lift: Vec<T> = (0..len * len)
        .map(|idx| x[idx / len] * x[idx % len])
        .collect();
    let system = ConstraintSystem::new(len, ps);
    let action = system.apply(&lift);
    let mut worst = T::zero();
    for (v, b) in action.iter().zip(&system.rhs) {
        worst = worst.max((*v - *b).abs());
    }
    let min_entry = lift.iter().copied().fold(T::infinity(), T::min);
    worst = worst.max(if min_entry < T::zero() { -min_entry } else { T::zero() });
    worst
}

/// Solve the lifted problem by ADMM-style splitting.
pub fn solve_sdp<T: Scalar>(
    problem: &SdpProblem<T>,
    config: &SdpConfig<T>,
) -> Result<SdpSolution<T>> {
    if !(config.tol > T::zero()) {
        return Err(MraError::InvalidParameter("tol must be positive".into()));
    }
    if config.max_outer == 0 || config.max_inner == 0 {
        return Err(MraError::InvalidParameter(
            "iteration caps must be at least 1".into(),
        ));
    }
    if !(config.rho > T::zero()) {
        return Err(MraError::InvalidParameter("rho must be positive".into()));
    }
    let len = problem.len;
    let dim = len * len;
    let system = ConstraintSystem::new(len, &problem.ps);

    let mut x = vec![T::zero(); dim];
    let mut z = vec![T::zero(); dim];
    let mut u = vec![T::zero(); dim];
    // Dykstra's correction vectors persist across outer iterations as warm
    // starts; the inner loop still drives the projection to its own
    // tolerance each time.
    let mut dykstra_p = vec![T::zero(); dim];
    let mut dykstra_q = vec![T::zero(); dim];

    let mut rho = config.rho;
    let inner_eps = config.tol / T::cast(10.0);
    // Assigned on every pass of the loop below before any read.
    let mut eigenvalues: Vec<T>;
    let mut best_residual = T::infinity();
    let mut stall_anchor = T::infinity();
    let mut dual_anchor = T::infinity();
    let mut infeasible = false;
    let mut converged = false;
    let mut iterations = 0;
    let mut residuals;

    loop {
        iterations += 1;

        // PSD step, absorbing the linear objective.
        let mut shifted = vec![T::zero(); dim];
        for i in 0..dim {
            shifted[i] = z[i] - u[i] - problem.objective[i] / rho;
        }
        let eig = symmetric_eigen(&shifted, len);
        x = reconstruct_clipped(&eig, len);
        eigenvalues = eig
            .values
            .iter()
            .map(|&v| if v > T::zero() { v } else { T::zero() })
            .collect();

        // Affine-and-nonnegative step via warm-started Dykstra.
        let mut target = vec![T::zero(); dim];
        for i in 0..dim {
            target[i] = x[i] + u[i];
        }
        let z_prev = z.clone();
        z = project_affine_nonneg(
            &system,
            &target,
            &mut dykstra_p,
            &mut dykstra_q,
            config.max_inner,
            inner_eps,
        );

        // Dual update.
        for i in 0..dim {
            u[i] += x[i] - z[i];
        }

        residuals = measure_residuals(&system, &x, &z);
        let worst = residuals.max();
        best_residual = best_residual.min(worst);
        if worst < config.tol {
            converged = true;
            break;
        }
        if iterations >= config.max_outer {
            break;
        }

        // Infeasibility detection: flag only when the residual has plateaued
        // far from tolerance (< 1% improvement over a long window) AND the
        // unscaled duals keep growing — on feasible problems the duals
        // converge, so growth plus a plateau means the constraint sets do
        // not intersect. `rho * u` is the unscaled dual, unchanged by the
        // rho rebalancing below.
        if iterations % STALL_WINDOW == 0 {
            let mut dual_sq = T::zero();
            for &v in u.iter() {
                dual_sq += v * v;
            }
            let dual_norm = rho * dual_sq.sqrt();
            if best_residual > stall_anchor * T::cast(0.99)
                && best_residual.as_f64() > STALL_RESIDUAL
                && dual_norm > dual_anchor * T::cast(DUAL_GROWTH)
            {
                infeasible = true;
                break;
            }
            stall_anchor = best_residual;
            dual_anchor = dual_norm;
        }

        // Residual balancing keeps the two splitting halves in step.
        if iterations % 50 == 0 {
            let mut primal = T::zero();
            let mut dual = T::zero();
            for i in 0..dim {
                primal += (x[i] - z[i]) * (x[i] - z[i]);
                let dz = z[i] - z_prev[i];
                dual += dz * dz;
            }
            let primal = primal.sqrt();
            let dual = rho * dual.sqrt();
            let ten = T::cast(10.0);
            if primal > ten * dual && rho.as_f64() < 1e3 {
                rho = rho * T::cast(2.0);
                for v in u.iter_mut() {
                    *v = *v / T::cast(2.0);
                }
            } else if dual > ten * primal && rho.as_f64() > 1e-3 {
                rho = rho / T::cast(2.0);
                for v in u.iter_mut() {
                    *v = *v * T::cast(2.0);
                }
            }
        }
    }

    let objective_value = problem
        .objective
        .iter()
        .zip(&x)
        .map(|(&r, &v)| r * v)
        .sum();
    let positive_sum: T = eigenvalues.iter().copied().sum();
    let rank1_gap = if positive_sum > T::zero() {
        T::one() - eigenvalues[0] / positive_sum
    } else {
        T::one()
    };
    Ok(SdpSolution {
        x_opt: x,
        objective_value,
        residuals,
        eigenvalues,
        rank1_gap,
        iterations,
        converged,
        infeasible,
        ps: problem.ps.clone(),
    })
}

/// Extract a binary signal candidate from a solved lift: rescale the
/// leading eigenvector to its gauge entry, threshold at 1/2, and verify the
/// power spectrum.
pub fn extract_signal<T: Scalar>(solution: &SdpSolution<T>) -> Result<SdpExtraction<T>> {
    let len = solution.ps.len();
    let eig = symmetric_eigen(&solution.x_opt, len);
    let leading = eig.vector(0);
    let gauge = leading[0];
    if gauge.abs().as_f64() < EXTRACT_GAUGE_EPS {
        return Err(MraError::DegenerateExtraction);
    }
    let rescaled: Vec<T> = leading.iter().map(|&v| v / gauge).collect();
    let estimate = SparseSignal::from_thresholded(&rescaled);
    let achieved = crate::invariants::power_spectrum(estimate.values());
    let mut num = T::zero();
    let mut den = T::zero();
    for (a, &p) in achieved.iter().zip(&solution.ps) {
        num += (*a - p) * (*a - p);
        den += p * p;
    }
    let ps_relative_error = if den > T::zero() {
        (num / den).sqrt()
    } else {
        num.sqrt()
    };
    Ok(SdpExtraction {
        estimate,
        rescaled_eigenvector: rescaled,
        ps_relative_error,
        verified: ps_relative_error.as_f64() < EXTRACT_VERIFY_TOL,
    })
}

/// Rebuild `proj_PSD(S)` from the eigendecomposition of `S`.
fn reconstruct_clipped<T: Scalar>(eig: &SymmetricEigen<T>, n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n * n];
    for (j, &lambda) in eig.values.iter().enumerate() {
        if lambda <= T::zero() {
            continue;
        }
        for i in 0..n {
            let scaled = lambda * eig.vectors[i * n + j];
            if scaled == T::zero() {
                continue;
            }
            for k in 0..n {
                out[i * n + k] += scaled * eig.vectors[k * n + j];
            }
        }
    }
    for i in 0..n {
        for k in (i + 1)..n {
            let avg = (out[i * n + k] + out[k * n + i]) / T::cast(2.0);
            out[i * n + k] = avg;
            out[k * n + i] = avg;
        }
    }
    out
}

/// The affine constraint family: `A(X) = b` stacking trace constraints,
/// diagonal-row ties, and the gauge. Rows are linearly dependent (the
/// cosine matrices pair up as `F_i = F_{L-i}`), so the normal equations use
/// an eigenvalue-thresholded pseudoinverse.
struct ConstraintSystem<T: Scalar> {
    len: usize,
    num_constraints: usize,
    /// `cos(2 pi i d / L)` indexed `[i][d]`, flattened.
    cos_table: Vec<T>,
    rhs: Vec<T>,
    gram: PseudoInverse<T>,
}

impl<T: Scalar> ConstraintSystem<T> {
    fn new(len: usize, ps: &[T]) -> Self {
        let num_constraints = 2 * len;
        let mut cos_table = vec![T::zero(); len * len];
        let tau = T::PI() + T::PI();
        for i in 0..len {
            for d in 0..len {
                let angle = tau * T::cast((i * d) as f64) / T::cast(len as f64);
                cos_table[i * len + d] = angle.cos();
            }
        }
        let mut rhs = vec![T::zero(); num_constraints];
        rhs[..len].copy_from_slice(ps);
        // Diagonal ties have rhs zero; the gauge is one.
        rhs[num_constraints - 1] = T::one();

        let mut system = ConstraintSystem {
            len,
            num_constraints,
            cos_table,
            rhs,
            gram: PseudoInverse::empty(),
        };
        system.gram = PseudoInverse::of_gram(&system);
        system
    }

    /// Apply `A` to a row-major matrix.
    fn apply(&self, x: &[T]) -> Vec<T> {
        let len = self.len;
        let mut out = vec![T::zero(); self.num_constraints];
        // Bin entries by circular difference, then take cosine sums.
        let mut diff_sums = vec![T::zero(); len];
        for a in 0..len {
            for b in 0..len {
                diff_sums[(a + len - b) % len] += x[a * len + b];
            }
        }
        for i in 0..len {
            let row = &self.cos_table[i * len..(i + 1) * len];
            out[i] = row.iter().zip(&diff_sums).map(|(&c, &v)| c * v).sum();
        }
        for i in 1..len {
            out[len + i - 1] =
                x[i * len + i] - (x[i] + x[i * len]) / T::cast(2.0);
        }
        out[self.num_constraints - 1] = x[0];
        out
    }

    /// Apply the adjoint `A^T` to a multiplier vector, producing a
    /// symmetric row-major matrix.
    fn adjoint(&self, lambda: &[T]) -> Vec<T> {
        let len = self.len;
        let mut out = vec![T::zero(); len * len];
        let mut weight_by_diff = vec![T::zero(); len];
        for i in 0..len {
            let li = lambda[i];
            if li == T::zero() {
                continue;
            }
            for d in 0..len {
                weight_by_diff[d] += li * self.cos_table[i * len + d];
            }
        }
        for a in 0..len {
            for b in 0..len {
                out[a * len + b] = weight_by_diff[(a + len - b) % len];
            }
        }
        let half = T::cast(0.5);
        for i in 1..len {
            let li = lambda[len + i - 1];
            out[i * len + i] += li;
            out[i] -= half * li;
            out[i * len] -= half * li;
        }
        out[0] += lambda[self.num_constraints - 1];
        out
    }

    /// Orthogonal projection onto `{X : A(X) = b}`.
    fn project_affine(&self, x: &[T]) -> Vec<T> {
        let mut residual = self.apply(x);
        for (r, b) in residual.iter_mut().zip(&self.rhs) {
            *r -= *b;
        }
        let multipliers = self.gram.solve(&residual);
        let correction = self.adjoint(&multipliers);
        x.iter().zip(&correction).map(|(&v, &c)| v - c).collect()
    }

    /// Worst affine violation of a candidate.
    fn max_violation(&self, x: &[T]) -> T {
        let action = self.apply(x);
        let mut worst = T::zero();
        for (v, b) in action.iter().zip(&self.rhs) {
            worst = worst.max((*v - *b).abs());
        }
        worst
    }
}

/// Eigenvalue-thresholded pseudoinverse of the constraint Gram matrix.
struct PseudoInverse<T: Scalar> {
    dim: usize,
    values: Vec<T>,
    vectors: Vec<T>,
}

impl<T: Scalar> PseudoInverse<T> {
    fn empty() -> Self {
        PseudoInverse { dim: 0, values: Vec::new(), vectors: Vec::new() }
    }

    /// Build from the Gram matrix `G[r][c] = <A_r, A_c>` computed through
    /// `A` and its adjoint.
    fn of_gram(system: &ConstraintSystem<T>) -> Self {
        let m = system.num_constraints;
        let mut gram = vec![T::zero(); m * m];
        let mut basis = vec![T::zero(); m];
        for c in 0..m {
            basis[c] = T::one();
            let column = system.apply(&system.adjoint(&basis));
            for r in 0..m {
                gram[r * m + c] = column[r];
            }
            basis[c] = T::zero();
        }
        // Exact symmetry before decomposition.
        for i in 0..m {
            for j in (i + 1)..m {
                let avg = (gram[i * m + j] + gram[j * m + i]) / T::cast(2.0);
                gram[i * m + j] = avg;
                gram[j * m + i] = avg;
            }
        }
        let eig = symmetric_eigen(&gram, m);
        PseudoInverse { dim: m, values: eig.values, vectors: eig.vectors }
    }

    /// `G^+ y` with small eigenvalues treated as null space.
    fn solve(&self, y: &[T]) -> Vec<T> {
        let m = self.dim;
        let cutoff = self.values[0].max(T::zero()) * T::cast(GRAM_NULL_EPS);
        let mut out = vec![T::zero(); m];
        for (j, &lambda) in self.values.iter().enumerate() {
            if lambda <= cutoff {
                continue;
            }
            let mut dot = T::zero();
            for i in 0..m {
                dot += self.vectors[i * m + j] * y[i];
            }
            let scaled = dot / lambda;
            for i in 0..m {
                out[i] += scaled * self.vectors[i * m + j];
            }
        }
        out
    }
}

/// Dykstra's alternating projections onto (affine set) ∩ (nonnegative
/// orthant), with persistent correction vectors for warm starting. Exits
/// early once the orthant-feasible iterate also satisfies the affine set to
/// `eps`.
fn project_affine_nonneg<T: Scalar>(
    system: &ConstraintSystem<T>,
    target: &[T],
    p: &mut [T],
    q: &mut [T],
    max_inner: usize,
    eps: T,
) -> Vec<T> {
    let dim = target.len();
    let mut current = target.to_vec();
    for _ in 0..max_inner {
        let mut shifted = vec![T::zero(); dim];
        for i in 0..dim {
            shifted[i] = current[i] + p[i];
        }
        let affine = system.project_affine(&shifted);
        for i in 0..dim {
            p[i] = shifted[i] - affine[i];
        }
        let mut nonneg = vec![T::zero(); dim];
        for i in 0..dim {
            let v = affine[i] + q[i];
            nonneg[i] = if v > T::zero() { v } else { T::zero() };
            q[i] = v - nonneg[i];
        }
        current = nonneg;
        if system.max_violation(&current) < eps {
            break;
        }
    }
    current
}

/// Residuals of the PSD iterate `x`, plus its gap to the other splitting
/// iterate `z`.
fn measure_residuals<T: Scalar>(
    system: &ConstraintSystem<T>,
    x: &[T],
    z: &[T],
) -> SdpResiduals<T> {
    let len = system.len;
    let action = system.apply(x);
    let trace: Vec<T> = (0..len)
        .map(|i| (action[i] - system.rhs[i]).abs())
        .collect();
    let diagonal: Vec<T> = (1..len)
        .map(|i| action[len + i - 1].abs())
        .collect();
    let gauge = (action[system.num_constraints - 1] - T::one()).abs();
    let min_entry = x.iter().copied().fold(T::infinity(), T::min);
    let negativity = if min_entry < T::zero() { -min_entry } else { T::zero() };
    let mut splitting = T::zero();
    for (a, b) in x.iter().zip(z) {
        splitting = splitting.max((*a - *b).abs());
    }
    SdpResiduals { trace, diagonal, gauge, negativity, splitting }
}
