//! Superpixel bilateral filtering with learnable multi-scale kernels.
//!
//! The crate decomposes an image into SLIC superpixels, represents each
//! superpixel by its mean position/color features, and filters per-point
//! activations through row-normalized Gaussian kernels built over a learned
//! transform of those features. Several kernel scales are combined per
//! channel by learned weights; every parameter (scales, feature transform,
//! combination weights) has an exact analytic gradient so the whole stack
//! trains end-to-end with Adam.
//!
//! Modules:
//! - [`superpixel`]: SLIC, mean features, label projection, quantization
//!   scoring, agglomerative merging.
//! - [`bilateral`]: the Gaussian kernel matrix, forward filtering, and its
//!   backward pass.
//! - [`inception`]: multi-scale kernel combination with a shared distance
//!   cache.
//! - [`network`]: dense layers, weighted softmax cross-entropy, Adam, a
//!   configurable toy segmentation network, gradient checking, and a
//!   synthetic blob dataset.
//! - [`image`] / [`mat`]: PPM/PGM rasters and dense `f64` matrices with a
//!   small binary container format.

pub mod bilateral;
pub mod error;
pub mod image;
pub mod inception;
pub mod mat;
pub mod network;
pub mod superpixel;

pub use error::{Error, Result};
pub use mat::Mat;

/// Formats a float with 17 significant digits in scientific notation, which
/// round-trips any finite `f64` exactly. Used for all textual numeric output.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Caps the worker-thread pool used by row-parallel kernels. Must be called
/// before any parallel work runs; later calls have no effect. Results never
/// depend on the thread count.
pub fn configure_threads(limit: Option<usize>) {
    if let Some(n) = limit {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_f64_round_trips() {
        for &x in &[0.0, 1.0, -1.5, 0.1, 1e-300, 2.2250738585072014e-308, 123456.789] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }
}
