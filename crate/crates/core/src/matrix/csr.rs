use std::ops::Range;

use super::{CooMatrix, SparseMatrix};
use crate::index::{self, ux, Index};
use crate::{Result, SpmvError};

/// Compressed sparse row matrix: `values`, `col_ind` and `row_ptr`.
///
/// Invariants: `row_ptr[0] == 0`, `row_ptr` is non-decreasing,
/// `row_ptr[n] == nnz`, and column indices are strictly increasing within
/// each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    values: Vec<f64>,
    col_ind: Vec<Index>,
    row_ptr: Vec<Index>,
}

impl CsrMatrix {
    pub fn new(
        n: usize,
        row_ptr: Vec<Index>,
        col_ind: Vec<Index>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(SpmvError::InvalidStructure(msg));
        if row_ptr.len() != n + 1 {
            return bad(format!(
                "row_ptr has length {}, expected {}",
                row_ptr.len(),
                n + 1
            ));
        }
        if col_ind.len() != values.len() {
            return bad(format!(
                "col_ind has length {} but values has {}",
                col_ind.len(),
                values.len()
            ));
        }
        if row_ptr[0] != 0 {
            return bad("row_ptr[0] must be 0".into());
        }
        if row_ptr.windows(2).any(|w| w[0] > w[1]) {
            return bad("row_ptr must be non-decreasing".into());
        }
        if row_ptr[n] < 0 || ux(row_ptr[n]) != values.len() {
            return bad(format!(
                "row_ptr[n] = {} but nnz = {}",
                row_ptr[n],
                values.len()
            ));
        }
        for i in 0..n {
            let cols = &col_ind[ux(row_ptr[i])..ux(row_ptr[i + 1])];
            if cols.iter().any(|&c| c < 0 || ux(c) >= n) {
                return bad(format!("row {i} has a column index outside [0, {n})"));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!(
                    "row {i} column indices are not strictly increasing"
                ));
            }
        }
        Ok(Self {
            n,
            values,
            col_ind,
            row_ptr,
        })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            values: Vec::new(),
            col_ind: Vec::new(),
            row_ptr: vec![0; n + 1],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut b = CsrBuilder::with_capacity(n, n);
        for i in 0..n {
            b.push(i, 1.0).expect("identity index fits");
            b.finish_row().expect("identity index fits");
        }
        b.build()
    }

    /// Builds CSR from a normalized COO matrix. Fails for non-square input or
    /// when `nnz` does not fit the index width.
    pub fn from_coo(coo: &CooMatrix) -> Result<Self> {
        if !coo.is_square() {
            return Err(SpmvError::NotSquare {
                rows: coo.n_rows(),
                cols: coo.n_cols(),
            });
        }
        let n = coo.n_rows();
        let mut b = CsrBuilder::with_capacity(n, coo.entries().len());
        let mut entries = coo.entries().iter().peekable();
        for i in 0..n {
            while let Some(&(_, c, v)) = entries.next_if(|e| e.0 == i) {
                b.push(c, v)?;
            }
            b.finish_row()?;
        }
        Ok(b.build())
    }

    pub fn to_coo(&self) -> CooMatrix {
        let mut entries = Vec::with_capacity(self.nnz());
        self.for_each_stored(&mut |i, j, v| entries.push((i, j, v)));
        CooMatrix::new(self.n, self.n, entries).expect("CSR entries are in bounds")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn col_ind(&self) -> &[Index] {
        &self.col_ind
    }

    pub fn row_ptr(&self) -> &[Index] {
        &self.row_ptr
    }

    /// Storage range of row `i` in `values` / `col_ind`.
    #[inline]
    pub fn row_range(&self, i: usize) -> Range<usize> {
        ux(self.row_ptr[i])..ux(self.row_ptr[i + 1])
    }

    /// Sum of `values[k] * x[col_ind[k]]` over row `i`, in ascending `k`.
    #[inline]
    pub(crate) fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let r = self.row_range(i);
        let mut s = 0.0;
        for (&v, &c) in self.values[r.clone()].iter().zip(&self.col_ind[r]) {
            s += v * x[ux(c)];
        }
        s
    }

    /// Iterates `(col, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_range(i);
        self.col_ind[r.clone()]
            .iter()
            .zip(&self.values[r])
            .map(|(&c, &v)| (ux(c), v))
    }
}

impl SparseMatrix for CsrMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }

    fn nnz(&self) -> usize {
        self.values.len()
    }

    fn for_each_stored(&self, f: &mut dyn FnMut(usize, usize, f64)) {
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                f(i, j, v);
            }
        }
    }
}

/// Row-by-row CSR assembly. Callers push columns in increasing order.
pub(crate) struct CsrBuilder {
    n: usize,
    values: Vec<f64>,
    col_ind: Vec<Index>,
    row_ptr: Vec<Index>,
}

impl CsrBuilder {
    pub(crate) fn with_capacity(n: usize, nnz: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        Self {
            n,
            values: Vec::with_capacity(nnz),
            col_ind: Vec::with_capacity(nnz),
            row_ptr,
        }
    }

    #[inline]
    pub(crate) fn push(&mut self, col: usize, value: f64) -> Result<()> {
        self.col_ind.push(index::from_usize(col)?);
        self.values.push(value);
        Ok(())
    }

    #[inline]
    pub(crate) fn finish_row(&mut self) -> Result<()> {
        self.row_ptr.push(index::from_usize(self.values.len())?);
        Ok(())
    }

    pub(crate) fn build(self) -> CsrMatrix {
        debug_assert_eq!(self.row_ptr.len(), self.n + 1);
        CsrMatrix {
            n: self.n,
            values: self.values,
            col_ind: self.col_ind,
            row_ptr: self.row_ptr,
        }
    }
}
