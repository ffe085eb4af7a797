//! Matrix and vector value types.
//!
//! All formats describe square `n x n` matrices of `f64` (COO may be
//! rectangular; it is only an ingestion stage). Every type is immutable once
//! built and can be shared read-only between worker threads.
//!
//! Diagonal offsets follow `offset = j - i`, so lane `k` of a DIA matrix
//! multiplies `x[i + offset[k]]`.

mod coo;
mod csr;
mod dia;
mod hybrid;

pub use coo::CooMatrix;
pub(crate) use csr::CsrBuilder;
pub use csr::CsrMatrix;
pub use dia::DiaMatrix;
pub use hybrid::{HdcMatrix, MHdcMatrix};

use crate::{Result, SpmvError};

/// Largest dimension [`reconstruct_dense`] will materialize by default.
pub const DEFAULT_DENSE_CAP: usize = 10_000;

/// Common read-only view over every storage format.
pub trait SparseMatrix {
    /// `(rows, cols)`.
    fn shape(&self) -> (usize, usize);

    /// Number of nonzeros of the original matrix held by this value.
    ///
    /// Zero fill inside diagonal lanes is not counted.
    fn nnz(&self) -> usize;

    /// Visits every stored slot as `(row, col, value)`, including explicit
    /// zero fill of diagonal lanes. No position is visited twice.
    fn for_each_stored(&self, f: &mut dyn FnMut(usize, usize, f64));

    fn n(&self) -> usize {
        self.shape().0
    }

    /// Average nonzeros per row, `c = nnz / n`.
    fn avg_row_nnz(&self) -> f64 {
        let n = self.n();
        if n == 0 {
            0.0
        } else {
            self.nnz() as f64 / n as f64
        }
    }
}

/// Row-major dense matrix, used as a reference when checking kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrid {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl DenseGrid {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged rows");
        Self {
            n_rows,
            n_cols,
            data: rows.concat(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Dense product `A x`, summing each row in ascending column order.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(SpmvError::DimensionMismatch {
                expected: self.n_cols,
                found: x.len(),
            });
        }
        Ok((0..self.n_rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }
}

/// Materializes any format as a dense grid, refusing dimensions above
/// [`DEFAULT_DENSE_CAP`].
pub fn reconstruct_dense<M: SparseMatrix + ?Sized>(m: &M) -> Result<DenseGrid> {
    reconstruct_dense_capped(m, DEFAULT_DENSE_CAP)
}

pub fn reconstruct_dense_capped<M: SparseMatrix + ?Sized>(m: &M, cap: usize) -> Result<DenseGrid> {
    let (rows, cols) = m.shape();
    let n = rows.max(cols);
    if n > cap {
        return Err(SpmvError::DenseCapExceeded { n, cap });
    }
    let mut grid = DenseGrid::zeros(rows, cols);
    m.for_each_stored(&mut |i, j, v| grid.data[i * cols + j] += v);
    Ok(grid)
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(SpmvError::DimensionMismatch { expected, found })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::example_matrix;

    fn example_rows() -> Vec<Vec<f64>> {
        vec![
            vec![1., 0., 2., 0., 0., 3., 0., 0.],
            vec![0., 4., 0., 5., 0., 0., 6., 0.],
            vec![0., 0., 7., 0., 8., 0., 0., 9.],
            vec![0., 0., 0., 10., 0., 0., 0., 0.],
            vec![11., 0., 0., 0., 12., 0., 13., 0.],
            vec![0., 0., 0., 0., 0., 14., 0., 15.],
            vec![0., 0., 16., 0., 0., 0., 17., 0.],
            vec![18., 0., 0., 19., 0., 0., 0., 20.],
        ]
    }

    #[test]
    fn example_csr_reconstructs_to_figure_grid() {
        let grid = reconstruct_dense(&example_matrix()).unwrap();
        assert_eq!(grid, DenseGrid::from_rows(&example_rows()));
    }

    #[test]
    fn empty_matrix_reconstructs_to_zeros() {
        let grid = reconstruct_dense(&CsrMatrix::empty(3)).unwrap();
        assert_eq!(grid, DenseGrid::zeros(3, 3));
    }

    #[test]
    fn example_mhdc_reconstructs_like_csr() {
        let a = example_matrix();
        let m = crate::convert::to_mhdc(&a, 0.6, 4).unwrap();
        assert_eq!(
            reconstruct_dense(&m).unwrap(),
            reconstruct_dense(&a).unwrap()
        );
    }

    #[test]
    fn cap_is_enforced() {
        let err = reconstruct_dense_capped(&CsrMatrix::identity(11), 10).unwrap_err();
        assert!(matches!(
            err,
            SpmvError::DenseCapExceeded { n: 11, cap: 10 }
        ));
        assert!(reconstruct_dense_capped(&CsrMatrix::identity(10), 10).is_ok());
    }

    #[test]
    fn nnz_and_row_average() {
        let a = example_matrix();
        assert_eq!(a.nnz(), 20);
        assert_eq!(a.avg_row_nnz(), 2.5);
        let id = CsrMatrix::identity(5);
        assert_eq!(id.nnz(), 5);
        assert_eq!(id.avg_row_nnz(), 1.0);
    }

    #[test]
    fn nnz_of_3d_stencil_matches_enumeration() {
        // n = 27, n_x = 3: columns j in {i, i±1, i±3, i±9} clipped to [0, 27).
        let mut expected = 0;
        for i in 0i64..27 {
            for d in [0i64, 1, -1, 3, -3, 9, -9] {
                if (0..27).contains(&(i + d)) {
                    expected += 1;
                }
            }
        }
        let a = crate::synth::gen_stencil(crate::synth::StencilKind::P7_3d, 27).unwrap();
        assert_eq!(a.nnz(), expected);
        assert_eq!(a.avg_row_nnz(), expected as f64 / 27.0);
    }

    #[test]
    fn hybrid_parts_partition_nnz() {
        let a = example_matrix();
        let h = crate::convert::to_hdc(&a, 0.6).unwrap();
        assert_eq!(h.dia().nnz() + h.csr().nnz(), a.nnz());
        assert_eq!(h.nnz(), 20);
        let m = crate::convert::to_mhdc(&a, 0.6, 4).unwrap();
        assert_eq!(m.dia_nnz() + m.csr().nnz(), a.nnz());
        assert_eq!(m.nnz(), 20);
    }
}
