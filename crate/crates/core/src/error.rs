//! Error type shared by all modules.

use std::error::Error;
use std::fmt;

/// Errors reported by the toolkit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MraError {
    /// An argument violated a documented precondition; the message names it.
    InvalidParameter(String),
    /// An atom profile has a Fourier coefficient with modulus too small to
    /// deconvolve; `index` is the offending frequency.
    DegenerateAtom { index: usize },
    /// Every bispectrum magnitude is negligible, so no phase information can
    /// be recovered.
    DegenerateBispectrum,
    /// The reference signal has zero norm, leaving relative error undefined.
    ZeroNormReference,
    /// The gauge entry of the leading eigenvector vanished, so the lifted
    /// solution cannot be rescaled into signal space.
    DegenerateExtraction,
}

impl fmt::Display for MraError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MraError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            MraError::DegenerateAtom { index } => {
                write!(f, "atom profile is degenerate: |DFT| ~ 0 at frequency {index}")
            }
            MraError::DegenerateBispectrum => {
                write!(f, "bispectrum is degenerate: all magnitudes are negligible")
            }
            MraError::ZeroNormReference => {
                write!(f, "reference signal has zero norm; relative error undefined")
            }
            MraError::DegenerateExtraction => {
                write!(f, "leading eigenvector has a vanishing gauge entry")
            }
        }
    }
}

impl Error for MraError {}

/// Convenient alias used across the crate.
pub type Result<T> = std::result::Result<T, MraError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_messages_name_the_failure() {
        let e = MraError::DegenerateAtom { index: 3 };
        assert!(e.to_string().contains("frequency 3"));
        let e = MraError::InvalidParameter("sigma must be nonnegative".into());
        assert!(e.to_string().contains("sigma"));
    }
}
