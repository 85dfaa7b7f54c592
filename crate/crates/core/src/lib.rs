//! Tucker compression of dense and sparse tensors, with deterministic and
//! randomized (sketch-based) decompositions.
//!
//! The crate is organised around a small set of layers:
//!
//! * [`matrix`] and [`kernels`] — a column-major dense matrix plus the
//!   factorization kernels the decompositions rely on (thin QR, one-sided
//!   Jacobi SVD, strong rank-revealing QR, spectral norm).
//! * [`tensor`] — dense and sparse tensors, unfoldings, mode products,
//!   reconstruction and error measurement.
//! * [`sketch`] — seeded Gaussian sketch streams, randomized range finders
//!   and randomized SVD on top of a matrix-free [`sketch::LinearOperator`].
//! * [`tucker`] — the decompositions themselves: HOSVD and STHOSVD, their
//!   randomized counterparts, tolerance-driven adaptive variants, and the
//!   structure-preserving selection-based variants, together with the
//!   a-priori error bounds used to sanity-check results.
//! * [`data`] — dataset generators (Hilbert, synthetic sparse), `.tns`
//!   import/export, subsampling utilities and the on-disk archive format.
//!
//! Mode indices are 0-based everywhere in the API; file formats and the CLI
//! use 1-based indices as is conventional for coordinate tensor files.

pub mod data;
pub mod error;
pub mod kernels;
pub mod matrix;
pub mod sketch;
pub mod tensor;
pub mod tucker;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use tensor::{DenseTensor, SparseTensor, Tensor};
pub use tucker::{decompose, Method, ModeOrder, TuckerConfig, TuckerMeta, TuckerTensor};
