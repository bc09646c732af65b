//! Numerical toolkit for multi-reference alignment of sparse binary signals.
//!
//! A signal here is a binary vector on the cycle `Z_L`. Instead of the signal
//! itself we see many copies, each circularly shifted by an unknown offset
//! and corrupted by Gaussian noise. The crate covers the full pipeline:
//!
//! * [`signal`] — sparse signals, atom profiles, and observation generation;
//! * [`invariants`] — shift-invariant features (mean, power spectrum,
//!   bispectrum) estimated from observations with noise-bias correction;
//! * [`orbit`] — error metrics modulo the shift (and optional reflection)
//!   group;
//! * [`rrr`] — sparsity/power-spectrum alternating projections (RRR);
//! * [`em`] — expectation-maximization over the shift assignments;
//! * [`bispectrum_inversion`] — direct phase recovery from the bispectrum;
//! * [`sdp`] — a convex lifted relaxation solved by splitting projections.
//!
//! Everything is generic over the floating-point type via [`Scalar`];
//! `f64` aliases (and `f32` counterparts) are exported at the root.

pub mod bispectrum_inversion;
pub mod em;
pub mod error;
pub mod fft;
pub mod invariants;
pub mod io;
pub mod linalg;
pub mod orbit;
pub mod rng;
pub mod rrr;
pub mod scalar;
pub mod sdp;
pub mod signal;

pub use error::{MraError, Result};
pub use scalar::Scalar;

/// Double-precision sparse signal.
pub type SparseSignal64 = signal::SparseSignal<f64>;
/// Single-precision sparse signal.
pub type SparseSignal32 = signal::SparseSignal<f32>;
/// Double-precision atom profile.
pub type AtomProfile64 = signal::AtomProfile<f64>;
/// Single-precision atom profile.
pub type AtomProfile32 = signal::AtomProfile<f32>;
/// Double-precision observation batch.
pub type ObservationSet64 = signal::ObservationSet<f64>;
/// Single-precision observation batch.
pub type ObservationSet32 = signal::ObservationSet<f32>;
/// Double-precision feature estimates.
pub type InvariantEstimates64 = invariants::InvariantEstimates<f64>;
/// Single-precision feature estimates.
pub type InvariantEstimates32 = invariants::InvariantEstimates<f32>;
/// Double-precision orbit alignment result.
pub type OrbitError64 = orbit::OrbitError<f64>;
/// Single-precision orbit alignment result.
pub type OrbitError32 = orbit::OrbitError<f32>;
