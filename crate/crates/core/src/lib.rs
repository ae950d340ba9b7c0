//! Spatio-temporal graph scattering transform.
//!
//! The crate is organised bottom-up:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`graph`] | spatial/temporal graphs, graph shifts, eigendecomposition, flattening |
//! | [`product`] | Kronecker, Cartesian and strong product graphs |
//! | [`wavelet`] | geometric, monic cubic, itersine and polynomial filter banks |
//! | [`scattering`] | separable and joint scattering trees, pooling, feature maps |
//! | [`stability`] | numerical checks of frame, signal and structure stability bounds |
//! | [`pipeline`] | datasets, batch transforms, k-NN classification, benchmarks |
//!
//! Matrices are dense `nalgebra::DMatrix<f64>`. A spatio-temporal signal
//! `Z` is `N x T` (nodes by time stamps) and flattens row-major, so node
//! `s` at time `t` lands at index `s * T + t`.

pub mod error;
pub mod graph;
pub mod linalg;
pub mod pipeline;
pub mod product;
pub mod rng;
pub mod scattering;
pub mod skeleton;
pub mod stability;
pub mod wavelet;

pub use error::{Error, Result};
pub use graph::{
    build_line_graph, eigendecompose, flatten, make_shift, unflatten, Graph, ShiftKind, ShiftMatrix, StSignal,
};
pub use product::{product, ProductGraph, ProductKind};
pub use scattering::{FeatureMap, ScatteringConfig};
pub use wavelet::{BankSpec, FilterBank, PolynomialFilter, WaveletFamily};

/// Caps the global worker pool using `STGST_THREADS` when it is set.
///
/// Returns the number of threads requested, or `None` when the variable is
/// absent or unparsable. Calling this after the global pool exists is a no-op.
#[cfg(feature = "parallel")]
pub fn configure_threads_from_env() -> Option<usize> {
    let n = std::env::var("STGST_THREADS").ok()?.trim().parse::<usize>().ok()?;
    if n == 0 {
        return None;
    }
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Some(n)
}
