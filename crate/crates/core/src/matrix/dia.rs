use std::ops::Range;

use super::SparseMatrix;
use crate::index::{self, Index};
use crate::{Result, SpmvError};

/// Row range `[max(0, -off), min(n, n - off))` in which a diagonal with
/// offset `off = j - i` has in-bounds elements.
#[inline]
pub(crate) fn diag_span(n: usize, off: isize) -> Range<usize> {
    let n = n as isize;
    let start = (-off).max(0);
    let end = n.min(n - off).max(start);
    start as usize..end as usize
}

/// Diagonal storage: one dense lane of length `n` per stored diagonal.
///
/// Lane `k` holds `a[i][i + offsets[k]]` at position `i`; positions outside
/// the diagonal's span are zero. Offsets are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct DiaMatrix {
    n: usize,
    offsets: Vec<Index>,
    lanes: Vec<f64>,
    nnz: usize,
}

impl DiaMatrix {
    /// Builds a DIA matrix from per-lane vectors. `nnz` is taken to be the
    /// number of nonzero values in the lanes.
    pub fn new(n: usize, offsets: Vec<isize>, lanes: Vec<Vec<f64>>) -> Result<Self> {
        if offsets.len() != lanes.len() {
            return Err(SpmvError::InvalidStructure(format!(
                "{} offsets but {} lanes",
                offsets.len(),
                lanes.len()
            )));
        }
        if offsets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SpmvError::InvalidStructure(
                "offsets must be strictly increasing".into(),
            ));
        }
        let limit = n as isize - 1;
        let mut stored = Vec::with_capacity(offsets.len());
        let mut flat = Vec::with_capacity(n * lanes.len());
        for (&off, lane) in offsets.iter().zip(&lanes) {
            if off < -limit || off > limit {
                return Err(SpmvError::InvalidStructure(format!(
                    "offset {off} outside [-{limit}, {limit}]"
                )));
            }
            if lane.len() != n {
                return Err(SpmvError::InvalidStructure(format!(
                    "lane for offset {off} has length {}, expected {n}",
                    lane.len()
                )));
            }
            let span = diag_span(n, off);
            if lane
                .iter()
                .enumerate()
                .any(|(i, &v)| v != 0.0 && !span.contains(&i))
            {
                return Err(SpmvError::InvalidStructure(format!(
                    "lane for offset {off} is nonzero outside its span"
                )));
            }
            stored.push(index::from_isize(off)?);
            flat.extend_from_slice(lane);
        }
        let nnz = flat.iter().filter(|&&v| v != 0.0).count();
        Ok(Self {
            n,
            offsets: stored,
            lanes: flat,
            nnz,
        })
    }

    /// Assembles from validated parts; `nnz` counts the original entries
    /// placed into the lanes.
    pub(crate) fn from_parts(n: usize, offsets: Vec<Index>, lanes: Vec<f64>, nnz: usize) -> Self {
        debug_assert_eq!(lanes.len(), n * offsets.len());
        Self {
            n,
            offsets,
            lanes,
            nnz,
        }
    }

    pub fn n_diags(&self) -> usize {
        self.offsets.len()
    }

    pub fn offsets(&self) -> &[Index] {
        &self.offsets
    }

    #[inline]
    pub fn offset(&self, k: usize) -> isize {
        self.offsets[k] as isize
    }

    #[inline]
    pub fn lane(&self, k: usize) -> &[f64] {
        &self.lanes[k * self.n..(k + 1) * self.n]
    }

    /// Rows in which lane `k` addresses an in-bounds column.
    pub fn span(&self, k: usize) -> Range<usize> {
        diag_span(self.n, self.offset(k))
    }
}

impl SparseMatrix for DiaMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }

    fn nnz(&self) -> usize {
        self.nnz
    }

    fn for_each_stored(&self, f: &mut dyn FnMut(usize, usize, f64)) {
        for k in 0..self.n_diags() {
            let off = self.offset(k);
            let lane = self.lane(k);
            for i in self.span(k) {
                f(i, (i as isize + off) as usize, lane[i]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans() {
        assert_eq!(diag_span(8, 0), 0..8);
        assert_eq!(diag_span(8, 5), 0..3);
        assert_eq!(diag_span(8, -7), 7..8);
        assert_eq!(diag_span(1, 0), 0..1);
        assert_eq!(diag_span(0, 0), 0..0);
    }

    #[test]
    fn validates_lanes() {
        assert!(DiaMatrix::new(3, vec![0, 0], vec![vec![1.0; 3]; 2]).is_err());
        assert!(DiaMatrix::new(3, vec![3], vec![vec![0.0; 3]]).is_err());
        assert!(DiaMatrix::new(3, vec![0], vec![vec![1.0; 2]]).is_err());
        // offset 1 may not hold a value in the last row
        assert!(DiaMatrix::new(3, vec![1], vec![vec![1.0, 1.0, 1.0]]).is_err());
        let ok = DiaMatrix::new(3, vec![1], vec![vec![1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(ok.nnz(), 1);
    }
}
