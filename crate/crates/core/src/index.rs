//! Integer width used by every index array (`col_ind`, `row_ptr`, offsets,
//! `dia_ptr`).
//!
//! 32-bit by default; the `index64` feature switches to 64-bit. The byte
//! width feeds the `b_int` parameter of the performance model.

use crate::{Result, SpmvError};

#[cfg(not(feature = "index64"))]
pub type Index = i32;
#[cfg(feature = "index64")]
pub type Index = i64;

/// Size of one index element in bytes.
pub const INDEX_BYTES: usize = std::mem::size_of::<Index>();

/// Size of one value element in bytes (values are always `f64`).
pub const VALUE_BYTES: usize = std::mem::size_of::<f64>();

#[inline]
pub(crate) fn from_usize(v: usize) -> Result<Index> {
    Index::try_from(v).map_err(|_| SpmvError::IndexOverflow(v as u128))
}

#[inline]
pub(crate) fn from_isize(v: isize) -> Result<Index> {
    Index::try_from(v).map_err(|_| SpmvError::IndexOverflow(v.unsigned_abs() as u128))
}

/// Converts a stored, already validated index to `usize`.
#[inline(always)]
pub(crate) fn ux(v: Index) -> usize {
    v as usize
}
