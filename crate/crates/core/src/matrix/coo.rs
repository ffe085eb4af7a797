use super::SparseMatrix;
use crate::{Result, SpmvError};

/// Coordinate (triplet) form used while ingesting matrices.
///
/// After construction the entries are sorted by `(row, col)`, every position
/// appears at most once (duplicates are summed) and all indices are within
/// bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct CooMatrix {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooMatrix {
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        mut entries: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        if let Some(&(row, col, _)) = entries
            .iter()
            .find(|&&(r, c, _)| r >= n_rows || c >= n_cols)
        {
            return Err(SpmvError::IndexOutOfBounds {
                row,
                col,
                n_rows,
                n_cols,
            });
        }
        // stable sort keeps duplicates in input order so summation is reproducible
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            entries: merged,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }
}

impl SparseMatrix for CooMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    fn nnz(&self) -> usize {
        self.entries.len()
    }

    fn for_each_stored(&self, f: &mut dyn FnMut(usize, usize, f64)) {
        for &(r, c, v) in &self.entries {
            f(r, c, v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorts_and_sums_duplicates() {
        let coo = CooMatrix::new(
            3,
            3,
            vec![(2, 1, 1.0), (0, 2, 2.0), (2, 1, 0.5), (0, 0, 3.0)],
        )
        .unwrap();
        assert_eq!(coo.entries(), &[(0, 0, 3.0), (0, 2, 2.0), (2, 1, 1.5)]);
        assert_eq!(coo.nnz(), 3);
    }

    #[test]
    fn rejects_out_of_bounds() {
        let err = CooMatrix::new(2, 2, vec![(0, 2, 1.0)]).unwrap_err();
        assert!(matches!(
            err,
            SpmvError::IndexOutOfBounds { row: 0, col: 2, .. }
        ));
    }

    #[test]
    fn rectangular_is_allowed_here() {
        let coo = CooMatrix::new(2, 3, vec![(1, 2, 1.0)]).unwrap();
        assert!(!coo.is_square());
        assert_eq!(coo.shape(), (2, 3));
    }
}
