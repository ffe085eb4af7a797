//! Diagonal-aware sparse matrix-vector multiplication.
//!
//! The crate provides four storage formats for square sparse matrices
//! (CSR, DIA, the hybrid DIA+CSR format HDC, and its per-block variant
//! M-HDC), the six SpMV kernels built on them (including the cache-blocked
//! B-DIA, B-HDC and M-HDC kernels), memory-traffic performance models that
//! predict the speedup of the blocked kernels over CSR, and a best-of-N
//! timing harness.
//!
//! ```
//! use diaspmv::{convert, kernels, synth, Workers};
//!
//! let a = synth::example_matrix();
//! let m = convert::to_mhdc(&a, 0.6, 4).unwrap();
//! let x: Vec<f64> = (1..=8).map(f64::from).collect();
//! let y = kernels::spmv_mhdc(&m, &x, &Workers::sequential()).unwrap();
//! assert_eq!(y, vec![25.0, 70.0, 133.0, 40.0, 162.0, 204.0, 167.0, 254.0]);
//! ```

pub mod bench;
pub mod convert;
mod error;
pub mod index;
pub mod io;
pub mod kernels;
pub mod matrix;
pub mod perfmodel;
pub mod synth;
mod workers;

pub use error::{Result, SpmvError};
pub use index::Index;
pub use matrix::{
    reconstruct_dense, CooMatrix, CsrMatrix, DenseGrid, DiaMatrix, HdcMatrix, MHdcMatrix,
    SparseMatrix, DEFAULT_DENSE_CAP,
};
pub use workers::Workers;
