use std::ops::Range;

use super::dia::diag_span;
use super::{CsrMatrix, DiaMatrix, SparseMatrix};
use crate::index::{self, ux, Index};
use crate::{Result, SpmvError};

fn check_theta(theta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&theta) {
        Ok(())
    } else {
        Err(SpmvError::OutOfRange {
            name: "theta",
            value: theta,
            range: "[0, 1]",
        })
    }
}

/// Hybrid DIA + CSR matrix: whole diagonals that passed the threshold are
/// held in `dia`, everything else in `csr`. No position is stored twice.
#[derive(Debug, Clone, PartialEq)]
pub struct HdcMatrix {
    dia: DiaMatrix,
    csr: CsrMatrix,
    theta: f64,
}

impl HdcMatrix {
    /// Checks dimensions, `theta` and that no CSR entry lies on a stored
    /// diagonal.
    pub fn from_parts(dia: DiaMatrix, csr: CsrMatrix, theta: f64) -> Result<Self> {
        check_theta(theta)?;
        if dia.n() != csr.n() {
            return Err(SpmvError::DimensionMismatch {
                expected: dia.n(),
                found: csr.n(),
            });
        }
        for i in 0..csr.n() {
            for (j, _) in csr.row(i) {
                let off = j as isize - i as isize;
                if dia.offsets().iter().any(|&o| o as isize == off) {
                    return Err(SpmvError::InvalidStructure(format!(
                        "({i}, {j}) is stored in both the DIA and CSR parts"
                    )));
                }
            }
        }
        Ok(Self { dia, csr, theta })
    }

    pub(crate) fn from_parts_unchecked(dia: DiaMatrix, csr: CsrMatrix, theta: f64) -> Self {
        Self { dia, csr, theta }
    }

    pub fn dia(&self) -> &DiaMatrix {
        &self.dia
    }

    pub fn csr(&self) -> &CsrMatrix {
        &self.csr
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

impl SparseMatrix for HdcMatrix {
    fn shape(&self) -> (usize, usize) {
        self.csr.shape()
    }

    fn nnz(&self) -> usize {
        self.dia.nnz() + self.csr.nnz()
    }

    fn for_each_stored(&self, f: &mut dyn FnMut(usize, usize, f64)) {
        self.dia.for_each_stored(f);
        self.csr.for_each_stored(f);
    }
}

/// Per-block hybrid matrix.
///
/// Rows are split into blocks of `bl` rows (the last one may be shorter).
/// For block `ib`, segments `dia_ptr[ib]..dia_ptr[ib + 1]` hold the partial
/// diagonals that passed the threshold inside that block, each as a
/// length-`bl` slice indexed by `i - ib * bl`. Offsets are strictly
/// increasing within a block. The rest lives in `csr`.
#[derive(Debug, Clone, PartialEq)]
pub struct MHdcMatrix {
    n: usize,
    bl: usize,
    dia_ptr: Vec<Index>,
    dia_offsets: Vec<Index>,
    segments: Vec<f64>,
    csr: CsrMatrix,
    theta: f64,
    dia_nnz: usize,
}

impl MHdcMatrix {
    /// Validating constructor. `segments[k]` must have length `bl` and be
    /// zero outside the matrix; the DIA-part nonzero count is the number of
    /// nonzero segment values.
    pub fn from_parts(
        bl: usize,
        dia_ptr: Vec<Index>,
        dia_offsets: Vec<isize>,
        segments: Vec<Vec<f64>>,
        csr: CsrMatrix,
        theta: f64,
    ) -> Result<Self> {
        check_theta(theta)?;
        if bl == 0 {
            return Err(SpmvError::ZeroBlockWidth);
        }
        let n = csr.n();
        let n_blocks = n.div_ceil(bl);
        let bad = |msg: String| Err(SpmvError::InvalidStructure(msg));
        if dia_ptr.len() != n_blocks + 1 || dia_ptr[0] != 0 {
            return bad(format!(
                "dia_ptr must have length {} and start at 0",
                n_blocks + 1
            ));
        }
        if dia_ptr.windows(2).any(|w| w[0] > w[1]) {
            return bad("dia_ptr must be non-decreasing".into());
        }
        let n_seg = ux(dia_ptr[n_blocks]);
        if dia_offsets.len() != n_seg || segments.len() != n_seg {
            return bad(format!(
                "dia_ptr[n_blocks] = {n_seg} but there are {} offsets and {} segments",
                dia_offsets.len(),
                segments.len()
            ));
        }
        let limit = n as isize - 1;
        let mut flat = Vec::with_capacity(n_seg * bl);
        for ib in 0..n_blocks {
            let ks = ux(dia_ptr[ib])..ux(dia_ptr[ib + 1]);
            let offs = &dia_offsets[ks.clone()];
            if offs.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("offsets of block {ib} are not strictly increasing"));
            }
            let rows = ib * bl..((ib + 1) * bl).min(n);
            for k in ks {
                let off = dia_offsets[k];
                if off < -limit || off > limit {
                    return bad(format!("offset {off} outside [-{limit}, {limit}]"));
                }
                let seg = &segments[k];
                if seg.len() != bl {
                    return bad(format!(
                        "segment {k} has length {}, expected {bl}",
                        seg.len()
                    ));
                }
                let span = diag_span(n, off);
                let outside = seg.iter().enumerate().any(|(li, &v)| {
                    let i = rows.start + li;
                    v != 0.0 && (i >= rows.end || !span.contains(&i))
                });
                if outside {
                    return bad(format!("segment {k} is nonzero outside the matrix"));
                }
                flat.extend_from_slice(seg);
            }
            for i in rows {
                for (j, _) in csr.row(i) {
                    let o = j as isize - i as isize;
                    if offs.contains(&o) {
                        return bad(format!("({i}, {j}) is stored in both parts"));
                    }
                }
            }
        }
        let dia_nnz = flat.iter().filter(|&&v| v != 0.0).count();
        let dia_offsets = dia_offsets
            .into_iter()
            .map(index::from_isize)
            .collect::<Result<_>>()?;
        Ok(Self {
            n,
            bl,
            dia_ptr,
            dia_offsets,
            segments: flat,
            csr,
            theta,
            dia_nnz,
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts_unchecked(
        n: usize,
        bl: usize,
        dia_ptr: Vec<Index>,
        dia_offsets: Vec<Index>,
        segments: Vec<f64>,
        csr: CsrMatrix,
        theta: f64,
        dia_nnz: usize,
    ) -> Self {
        debug_assert_eq!(segments.len(), dia_offsets.len() * bl);
        Self {
            n,
            bl,
            dia_ptr,
            dia_offsets,
            segments,
            csr,
            theta,
            dia_nnz,
        }
    }

    pub fn bl(&self) -> usize {
        self.bl
    }

    pub fn n_blocks(&self) -> usize {
        self.dia_ptr.len() - 1
    }

    pub fn n_segments(&self) -> usize {
        self.dia_offsets.len()
    }

    pub fn dia_ptr(&self) -> &[Index] {
        &self.dia_ptr
    }

    pub fn dia_offsets(&self) -> &[Index] {
        &self.dia_offsets
    }

    #[inline]
    pub fn offset(&self, k: usize) -> isize {
        self.dia_offsets[k] as isize
    }

    /// Segment `k`, always `bl` long.
    #[inline]
    pub fn segment(&self, k: usize) -> &[f64] {
        &self.segments[k * self.bl..(k + 1) * self.bl]
    }

    /// Global rows covered by block `ib`.
    #[inline]
    pub fn block_rows(&self, ib: usize) -> Range<usize> {
        ib * self.bl..((ib + 1) * self.bl).min(self.n)
    }

    /// Segment indices belonging to block `ib`.
    #[inline]
    pub fn block_segments(&self, ib: usize) -> Range<usize> {
        ux(self.dia_ptr[ib])..ux(self.dia_ptr[ib + 1])
    }

    pub fn csr(&self) -> &CsrMatrix {
        &self.csr
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Original nonzeros held in the segments.
    pub fn dia_nnz(&self) -> usize {
        self.dia_nnz
    }

    /// Number of segment slots, summing the true length of every block
    /// (a short final block contributes fewer than `bl` per segment).
    pub fn dia_slots(&self) -> usize {
        (0..self.n_blocks())
            .map(|ib| self.block_segments(ib).len() * self.block_rows(ib).len())
            .sum()
    }
}

impl SparseMatrix for MHdcMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }

    fn nnz(&self) -> usize {
        self.dia_nnz + self.csr.nnz()
    }

    fn for_each_stored(&self, f: &mut dyn FnMut(usize, usize, f64)) {
        for ib in 0..self.n_blocks() {
            let rows = self.block_rows(ib);
            for k in self.block_segments(ib) {
                let off = self.offset(k);
                let seg = self.segment(k);
                let span = diag_span(self.n, off);
                for i in rows.start.max(span.start)..rows.end.min(span.end) {
                    f(i, (i as isize + off) as usize, seg[i - rows.start]);
                }
            }
        }
        self.csr.for_each_stored(f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::reconstruct_dense;
    use crate::synth::example_matrix;

    fn example_mhdc_parts() -> (Vec<Index>, Vec<isize>, Vec<Vec<f64>>, CsrMatrix) {
        let csr = CsrMatrix::new(
            8,
            vec![0, 0, 0, 0, 0, 1, 2, 2, 3],
            vec![6, 7, 0],
            vec![13.0, 15.0, 18.0],
        )
        .unwrap();
        (
            vec![0, 3, 5],
            vec![0, 2, 5, -4, 0],
            vec![
                vec![1., 4., 7., 10.],
                vec![2., 5., 8., 0.],
                vec![3., 6., 9., 0.],
                vec![11., 0., 16., 19.],
                vec![12., 14., 17., 20.],
            ],
            csr,
        )
    }

    #[test]
    fn hand_built_mhdc_matches_example() {
        let (ptr, offs, segs, csr) = example_mhdc_parts();
        let m = MHdcMatrix::from_parts(4, ptr, offs, segs, csr, 0.6).unwrap();
        assert_eq!(m.dia_nnz(), 17);
        assert_eq!(m.dia_slots(), 20);
        assert_eq!(
            reconstruct_dense(&m).unwrap(),
            reconstruct_dense(&example_matrix()).unwrap()
        );
    }

    #[test]
    fn mhdc_rejects_overlap_and_bad_order() {
        let (ptr, offs, segs, _) = example_mhdc_parts();
        // (4, 4) has offset 0, which block 1 stores
        let clash = CsrMatrix::new(8, vec![0, 0, 0, 0, 0, 1, 1, 1, 1], vec![4], vec![1.0]).unwrap();
        assert!(
            MHdcMatrix::from_parts(4, ptr.clone(), offs.clone(), segs.clone(), clash, 0.6).is_err()
        );

        let (ptr, mut offs, segs, csr) = example_mhdc_parts();
        offs.swap(3, 4);
        assert!(MHdcMatrix::from_parts(4, ptr, offs, segs, csr, 0.6).is_err());

        let (ptr, offs, segs, csr) = example_mhdc_parts();
        assert!(matches!(
            MHdcMatrix::from_parts(0, ptr, offs, segs, csr, 0.6),
            Err(SpmvError::ZeroBlockWidth)
        ));
    }

    #[test]
    fn mhdc_rejects_fill_outside_matrix() {
        let (ptr, offs, mut segs, csr) = example_mhdc_parts();
        // offset 5 in row 3 would address column 8
        segs[2][3] = 1.0;
        assert!(MHdcMatrix::from_parts(4, ptr, offs, segs, csr, 0.6).is_err());
    }

    #[test]
    fn hdc_rejects_overlap() {
        let dia = DiaMatrix::new(2, vec![0], vec![vec![1.0, 1.0]]).unwrap();
        let csr = CsrMatrix::new(2, vec![0, 1, 1], vec![0], vec![3.0]).unwrap();
        assert!(HdcMatrix::from_parts(dia.clone(), csr, 0.5).is_err());
        let csr = CsrMatrix::new(2, vec![0, 1, 1], vec![1], vec![3.0]).unwrap();
        let h = HdcMatrix::from_parts(dia, csr, 0.5).unwrap();
        assert_eq!(h.nnz(), 3);
        assert!(HdcMatrix::from_parts(h.dia().clone(), h.csr().clone(), 1.5).is_err());
    }
}
