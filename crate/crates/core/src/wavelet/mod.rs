//! Wavelet filter banks over a single graph shift, and the separable and
//! joint spatio-temporal filtering operations built on them.

mod bank;
mod filter;
pub mod kernel;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bank::{
    build_custom_bank, build_geometric_bank, build_spectral_bank, estimate_frame_bounds, estimate_kernel_constants,
    BankSpec, FilterBank, FrameBounds, KernelConstants, DEFAULT_MONIC_CUBIC_SCALE_RANGE,
};
pub use filter::{apply_joint, apply_separable, coefficient_matrices, joint_coefficient_matrix, PolynomialFilter};
pub use kernel::SpectralKernel;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveletFamily {
    Geometric,
    MonicCubic,
    Itersine,
    #[serde(rename = "custom_poly")]
    CustomPolynomial,
}

impl WaveletFamily {
    pub const ALL: [WaveletFamily; 4] = [
        WaveletFamily::Geometric,
        WaveletFamily::MonicCubic,
        WaveletFamily::Itersine,
        WaveletFamily::CustomPolynomial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WaveletFamily::Geometric => "geometric",
            WaveletFamily::MonicCubic => "monic_cubic",
            WaveletFamily::Itersine => "itersine",
            WaveletFamily::CustomPolynomial => "custom_poly",
        }
    }

    /// Spectral families are defined through an eigendecomposition and so
    /// need a symmetric shift.
    pub fn requires_symmetric_shift(self) -> bool {
        matches!(self, WaveletFamily::MonicCubic | WaveletFamily::Itersine)
    }

    /// Shift used when a config does not name one.
    pub fn default_shift(self) -> crate::ShiftKind {
        match self {
            WaveletFamily::Geometric => crate::ShiftKind::LazyRandomWalk,
            WaveletFamily::MonicCubic | WaveletFamily::Itersine => crate::ShiftKind::NormalizedLaplacian,
            WaveletFamily::CustomPolynomial => crate::ShiftKind::NormalizedAdjacency,
        }
    }
}

impl fmt::Display for WaveletFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WaveletFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        WaveletFamily::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown wavelet family '{s}'")))
    }
}
