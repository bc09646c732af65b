//! Dense symmetric eigendecomposition and PSD projection.
//!
//! A classical cyclic Jacobi iteration: adequate and fully accurate for the
//! small matrices used by the lifted solver (dimension equal to the signal
//! length), with no external dependencies and generic over the scalar type.

use num_traits::Float;

use crate::scalar::Scalar;

/// Eigendecomposition of a symmetric matrix: `A = V * diag(values) * V^T`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T: Scalar> {
    /// Eigenvalues, sorted descending.
    pub values: Vec<T>,
    /// Row-major `n x n` matrix whose *columns* are the matching
    /// orthonormal eigenvectors.
    pub vectors: Vec<T>,
}

impl<T: Scalar> SymmetricEigen<T> {
    /// Column `j` as a vector.
    pub fn vector(&self, j: usize) -> Vec<T> {
        let n = self.values.len();
        (0..n).map(|i| self.vectors[i * n + j]).collect()
    }
}

/// Eigendecomposition of the symmetric `n x n` matrix `a` (row-major).
/// Only the values actually present are read; the matrix is assumed exactly
/// symmetric (callers symmetrize first if needed).
pub fn symmetric_eigen<T: Scalar>(a: &[T], n: usize) -> SymmetricEigen<T> {
    assert_eq!(a.len(), n * n, "matrix must be n x n");
    let mut m = a.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    if n <= 1 {
        return SymmetricEigen { values: m, vectors: v };
    }

    let frobenius: T = a.iter().map(|&x| x * x).sum::<T>().sqrt();
    let stop = T::epsilon() * T::cast(n as f64) * frobenius.max(T::min_positive_value());
    // Each sweep visits every off-diagonal pair once; off-diagonal mass
    // decreases monotonically and quadratically near convergence.
    for _sweep in 0..64 {
        let mut off_sq = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off_sq += m[p * n + q] * m[p * n + q];
            }
        }
        if (off_sq + off_sq).sqrt() <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if Float::abs(apq) <= T::min_positive_value() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                // Symmetric Schur rotation annihilating (p, q).
                let tau = (aqq - app) / (apq + apq);
                let t = {
                    let root = (T::one() + tau * tau).sqrt();
                    if tau >= T::zero() {
                        T::one() / (tau + root)
                    } else {
                        T::one() / (tau - root)
                    }
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;

                // Update the matrix: A <- J^T A J with the (p, q) rotation.
                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = T::zero();
                m[q * n + p] = T::zero();
                for i in 0..n {
                    if i != p && i != q {
                        let aip = m[i * n + p];
                        let aiq = m[i * n + q];
                        let new_ip = c * aip - s * aiq;
                        let new_iq = s * aip + c * aiq;
                        m[i * n + p] = new_ip;
                        m[p * n + i] = new_ip;
                        m[i * n + q] = new_iq;
                        m[q * n + i] = new_iq;
                    }
                }
                // Accumulate the rotation into the eigenvector matrix.
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }

    // Sort eigenpairs by descending eigenvalue.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a_i, &b_i| {
        m[b_i * n + b_i]
            .partial_cmp(&m[a_i * n + a_i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values: Vec<T> = order.iter().map(|&j| m[j * n + j]).collect();
    let mut vectors = vec![T::zero(); n * n];
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + new_j] = v[i * n + old_j];
        }
    }
    SymmetricEigen { values, vectors }
}

/// Projection of a symmetric matrix onto the positive semidefinite cone:
/// eigendecompose and clip negative eigenvalues to zero.
pub fn project_psd<T: Scalar>(a: &[T], n: usize) -> Vec<T> {
    let eig = symmetric_eigen(a, n);
    let mut out = vec![T::zero(); n * n];
    for (j, &lambda) in eig.values.iter().enumerate() {
        if lambda <= T::zero() {
            continue;
        }
        for i in 0..n {
            let vi = eig.vectors[i * n + j];
            if vi == T::zero() {
                continue;
            }
            let scaled = lambda * vi;
            for k in 0..n {
                out[i * n + k] += scaled * eig.vectors[k * n + j];
            }
        }
    }
    // Exact symmetry despite accumulation order.
    for i in 0..n {
        for k in (i + 1)..n {
            let avg = (out[i * n + k] + out[k * n + i]) / T::cast(2.0);
            out[i * n + k] = avg;
            out[k * n + i] = avg;
        }
    }
    out
}
