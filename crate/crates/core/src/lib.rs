//! Low-rank compression for stacked RNN/LSTM models.
//!
//! The crate factors each layer's recurrent matrix `W_h` through a truncated
//! SVD, `W_h ~ Z_h * P`, and reuses the same row-space projection `P` to
//! replace the inter-layer matrix: `Z_x = argmin |Y * P - W_x|_F`. Because a
//! layer's hidden state only ever leaves through `P`, both the recurrence at
//! the next step and the feed into the layer above consume one shared
//! `P * h` product.
//!
//! Layout:
//! * [`linalg`]: dense matrices, Golub-Kahan SVD, row-space least squares.
//! * [`model`]: architecture descriptions, weights, parameter counting.
//! * [`compress`]: rank selection and the per-layer factorization driver.
//! * [`inference`]: forward pass for full and factored models, divergence
//!   metrics between the two.
//!
//! Everything here is `no_std`-compatible (with `alloc`); enable the `libm`
//! feature to supply float math when `std` is off. IO, file formats, and the
//! CLI live in the companion `rnnpress` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("enable at least one of the `std` or `libm` features");

extern crate alloc;

mod math;
pub mod rng;

pub mod compress;
pub mod inference;
pub mod linalg;
pub mod model;

pub use compress::{
    compress_layer, compress_model, select_rank, validate_policy, LayerReport, RankPolicy,
};
pub use inference::{compare, forward, DivergenceMetrics, Sequence};
pub use linalg::{least_squares_rowspace, svd, truncate, LinalgError, Matrix, SvdResult};
pub use model::{Architecture, CellType, LayerWeights, Model, ModelError};
