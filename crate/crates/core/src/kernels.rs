//! SpMV kernels `y = A x` for every storage format.
//!
//! Summation order is fixed per output element: CSR rows accumulate in
//! ascending storage order, and diagonal lanes are applied in ascending
//! offset order after the CSR part. Rows (CSR, DIA, HDC) or row blocks
//! (B-DIA, B-HDC, M-HDC) are the unit of parallel work, so each `y[i]` is
//! written by one task and the result is bitwise independent of the worker
//! count.
//!
//! The inner loops are plain unit-stride zips over slices, which the
//! compiler vectorizes on its own.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::matrix::{check_len, CsrMatrix, DiaMatrix, HdcMatrix, MHdcMatrix, SparseMatrix};
use crate::{convert, Result, SpmvError, Workers};

/// Partition of `[0, n)` into consecutive blocks of `bl` rows; only the last
/// block may be shorter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPlan {
    n: usize,
    bl: usize,
}

impl BlockPlan {
    pub fn new(n: usize, bl: usize) -> Result<Self> {
        if bl == 0 {
            return Err(SpmvError::ZeroBlockWidth);
        }
        Ok(Self { n, bl })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bl(&self) -> usize {
        self.bl
    }

    pub fn n_blocks(&self) -> usize {
        self.n.div_ceil(self.bl)
    }

    pub fn rows(&self, ib: usize) -> Range<usize> {
        ib * self.bl..((ib + 1) * self.bl).min(self.n)
    }

    pub fn ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.n_blocks()).map(|ib| self.rows(ib))
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.n == n {
            Ok(())
        } else {
            Err(SpmvError::PlanMismatch {
                plan: self.n,
                matrix: n,
            })
        }
    }
}

/// `y[i] += a[i] * x[i]` over equal-length slices.
#[inline(always)]
fn lane_fma(y: &mut [f64], a: &[f64], x: &[f64]) {
    for ((yi, &ai), &xi) in y.iter_mut().zip(a).zip(x) {
        *yi += ai * xi;
    }
}

/// Applies the part of diagonal `off` (values `lane`, indexed globally)
/// that falls into rows `[start, start + ys.len())`.
#[inline(always)]
fn lane_block(
    ys: &mut [f64],
    start: usize,
    lane: &[f64],
    span: &Range<usize>,
    off: isize,
    x: &[f64],
) {
    let is = start.max(span.start);
    let ie = (start + ys.len()).min(span.end);
    if is < ie {
        let xs = (is as isize + off) as usize;
        lane_fma(
            &mut ys[is - start..ie - start],
            &lane[is..ie],
            &x[xs..xs + (ie - is)],
        );
    }
}

#[inline(always)]
fn csr_rows(ys: &mut [f64], start: usize, m: &CsrMatrix, x: &[f64]) {
    for (li, yi) in ys.iter_mut().enumerate() {
        *yi = m.row_dot(start + li, x);
    }
}

/// DIA lanes applied one after another, each split across workers.
fn dia_lanes(m: &DiaMatrix, x: &[f64], y: &mut [f64], w: &Workers) {
    for k in 0..m.n_diags() {
        let span = m.span(k);
        let off = m.offset(k);
        let lane = m.lane(k);
        w.for_each_static(&mut y[span.clone()], |start, ys| {
            let i0 = span.start + start;
            let xs = (i0 as isize + off) as usize;
            lane_fma(ys, &lane[i0..i0 + ys.len()], &x[xs..xs + ys.len()]);
        });
    }
}

fn dims(n: usize, x: &[f64], y: &[f64]) -> Result<()> {
    check_len(n, x.len())?;
    check_len(n, y.len())
}

pub fn spmv_csr_into(m: &CsrMatrix, x: &[f64], y: &mut [f64], w: &Workers) -> Result<()> {
    dims(m.n(), x, y)?;
    w.for_each_static(y, |start, ys| csr_rows(ys, start, m, x));
    Ok(())
}

pub fn spmv_dia_into(m: &DiaMatrix, x: &[f64], y: &mut [f64], w: &Workers) -> Result<()> {
    dims(m.n(), x, y)?;
    w.for_each_static(y, |_, ys| ys.fill(0.0));
    dia_lanes(m, x, y, w);
    Ok(())
}

/// Cache-blocked DIA: for each block, zero its slice of `y` and apply every
/// lane restricted to the block. Produces the same bits as [`spmv_dia`].
pub fn spmv_bdia_into(
    m: &DiaMatrix,
    plan: &BlockPlan,
    x: &[f64],
    y: &mut [f64],
    w: &Workers,
) -> Result<()> {
    dims(m.n(), x, y)?;
    plan.check(m.n())?;
    let spans: Vec<Range<usize>> = (0..m.n_diags()).map(|k| m.span(k)).collect();
    w.for_each_chunk(y, plan.bl(), |start, ys| {
        ys.fill(0.0);
        for (k, span) in spans.iter().enumerate() {
            lane_block(ys, start, m.lane(k), span, m.offset(k), x);
        }
    });
    Ok(())
}

/// CSR part over all rows, then the DIA lanes.
pub fn spmv_hdc_into(m: &HdcMatrix, x: &[f64], y: &mut [f64], w: &Workers) -> Result<()> {
    dims(m.n(), x, y)?;
    w.for_each_static(y, |start, ys| csr_rows(ys, start, m.csr(), x));
    dia_lanes(m.dia(), x, y, w);
    Ok(())
}

/// Cache-blocked HDC: per block, the CSR rows and then the block's slice of
/// each lane. Same bits as [`spmv_hdc`].
pub fn spmv_bhdc_into(
    m: &HdcMatrix,
    plan: &BlockPlan,
    x: &[f64],
    y: &mut [f64],
    w: &Workers,
) -> Result<()> {
    dims(m.n(), x, y)?;
    plan.check(m.n())?;
    let dia = m.dia();
    let spans: Vec<Range<usize>> = (0..dia.n_diags()).map(|k| dia.span(k)).collect();
    w.for_each_chunk(y, plan.bl(), |start, ys| {
        csr_rows(ys, start, m.csr(), x);
        for (k, span) in spans.iter().enumerate() {
            lane_block(ys, start, dia.lane(k), span, dia.offset(k), x);
        }
    });
    Ok(())
}

/// M-HDC: per block, the CSR rows and then that block's own segments,
/// which are indexed locally (`i - block_start`).
pub fn spmv_mhdc_into(m: &MHdcMatrix, x: &[f64], y: &mut [f64], w: &Workers) -> Result<()> {
    dims(m.n(), x, y)?;
    let n = m.n() as isize;
    let bl = m.bl();
    w.for_each_chunk(y, bl, |start, ys| {
        csr_rows(ys, start, m.csr(), x);
        let end = start + ys.len();
        for k in m.block_segments(start / bl) {
            let off = m.offset(k);
            let is = (start as isize).max(-off) as usize;
            let ie = (end as isize).min(n - off);
            if ie <= is as isize {
                continue;
            }
            let ie = ie as usize;
            let seg = &m.segment(k)[is - start..ie - start];
            let xs = (is as isize + off) as usize;
            lane_fma(&mut ys[is - start..ie - start], seg, &x[xs..xs + (ie - is)]);
        }
    });
    Ok(())
}

macro_rules! allocating {
    ($(#[$doc:meta])* $name:ident => $into:ident ($m:ident : $ty:ty $(, $p:ident : $pty:ty)*)) => {
        $(#[$doc])*
        pub fn $name($m: $ty $(, $p: $pty)*, x: &[f64], w: &Workers) -> Result<Vec<f64>> {
            let mut y = vec![0.0; $m.n()];
            $into($m $(, $p)*, x, &mut y, w)?;
            Ok(y)
        }
    };
}

allocating!(
    /// CSR kernel.
    spmv_csr => spmv_csr_into(m: &CsrMatrix)
);
allocating!(
    /// DIA kernel.
    spmv_dia => spmv_dia_into(m: &DiaMatrix)
);
allocating!(
    /// B-DIA kernel.
    spmv_bdia => spmv_bdia_into(m: &DiaMatrix, plan: &BlockPlan)
);
allocating!(
    /// HDC kernel.
    spmv_hdc => spmv_hdc_into(m: &HdcMatrix)
);
allocating!(
    /// B-HDC kernel.
    spmv_bhdc => spmv_bhdc_into(m: &HdcMatrix, plan: &BlockPlan)
);
allocating!(
    /// M-HDC kernel.
    spmv_mhdc => spmv_mhdc_into(m: &MHdcMatrix)
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Csr,
    Dia,
    BDia,
    Hdc,
    BHdc,
    MHdc,
}

impl KernelKind {
    pub const ALL: [KernelKind; 6] = [
        Self::Csr,
        Self::Dia,
        Self::BDia,
        Self::Hdc,
        Self::BHdc,
        Self::MHdc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Csr => "csr",
            Self::Dia => "dia",
            Self::BDia => "bdia",
            Self::Hdc => "hdc",
            Self::BHdc => "bhdc",
            Self::MHdc => "mhdc",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = SpmvError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| SpmvError::Unsupported(format!("kernel `{s}`")))
    }
}

/// A matrix converted to the format one kernel needs, ready to apply.
#[derive(Debug, Clone)]
pub enum Prepared<'a> {
    Csr(&'a CsrMatrix),
    Dia(DiaMatrix),
    BDia(DiaMatrix, BlockPlan),
    Hdc(HdcMatrix),
    BHdc(HdcMatrix, BlockPlan),
    MHdc(MHdcMatrix),
}

impl<'a> Prepared<'a> {
    /// Converts `m` for `kind`. `theta` is used by the hybrid formats and
    /// `bl` by the blocked ones; both are validated only where used.
    pub fn build(kind: KernelKind, m: &'a CsrMatrix, theta: f64, bl: usize) -> Result<Self> {
        Ok(match kind {
            KernelKind::Csr => Self::Csr(m),
            KernelKind::Dia => Self::Dia(convert::to_dia(m)?),
            KernelKind::BDia => {
                let plan = BlockPlan::new(m.n(), bl)?;
                Self::BDia(convert::to_dia(m)?, plan)
            }
            KernelKind::Hdc => Self::Hdc(convert::to_hdc(m, theta)?),
            KernelKind::BHdc => {
                let plan = BlockPlan::new(m.n(), bl)?;
                Self::BHdc(convert::to_hdc(m, theta)?, plan)
            }
            KernelKind::MHdc => Self::MHdc(convert::to_mhdc(m, theta, bl)?),
        })
    }

    pub fn kind(&self) -> KernelKind {
        match self {
            Self::Csr(_) => KernelKind::Csr,
            Self::Dia(_) => KernelKind::Dia,
            Self::BDia(..) => KernelKind::BDia,
            Self::Hdc(_) => KernelKind::Hdc,
            Self::BHdc(..) => KernelKind::BHdc,
            Self::MHdc(_) => KernelKind::MHdc,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Csr(m) => m.n(),
            Self::Dia(m) | Self::BDia(m, _) => m.n(),
            Self::Hdc(m) | Self::BHdc(m, _) => m.n(),
            Self::MHdc(m) => m.n(),
        }
    }

    /// Nonzeros of the original matrix.
    pub fn nnz(&self) -> usize {
        match self {
            Self::Csr(m) => m.nnz(),
            Self::Dia(m) | Self::BDia(m, _) => m.nnz(),
            Self::Hdc(m) | Self::BHdc(m, _) => m.nnz(),
            Self::MHdc(m) => m.nnz(),
        }
    }

    /// Filling and CSR rates for the hybrid formats.
    pub fn rates(&self) -> Option<Result<convert::Rates>> {
        match self {
            Self::Hdc(m) | Self::BHdc(m, _) => Some(convert::rates(m)),
            Self::MHdc(m) => Some(convert::rates(m)),
            _ => None,
        }
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64], w: &Workers) -> Result<()> {
        match self {
            Self::Csr(m) => spmv_csr_into(m, x, y, w),
            Self::Dia(m) => spmv_dia_into(m, x, y, w),
            Self::BDia(m, p) => spmv_bdia_into(m, p, x, y, w),
            Self::Hdc(m) => spmv_hdc_into(m, x, y, w),
            Self::BHdc(m, p) => spmv_bhdc_into(m, p, x, y, w),
            Self::MHdc(m) => spmv_mhdc_into(m, x, y, w),
        }
    }

    pub fn apply(&self, x: &[f64], w: &Workers) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n()];
        self.apply_into(x, &mut y, w)?;
        Ok(y)
    }
}

/// Largest component error of a kernel output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    pub row: usize,
    pub got: f64,
    pub want: f64,
    /// `|got - want| / Σ_j |a_ij x_j|`; zero-scale rows must match exactly
    /// or report `inf`.
    pub rel_err: f64,
}

/// Worst row of `got` against `want` for `y = m x`, each error scaled by
/// the magnitude of the terms summed into that row. `None` when `n = 0`.
pub fn worst_deviation(
    m: &CsrMatrix,
    x: &[f64],
    got: &[f64],
    want: &[f64],
) -> Result<Option<Deviation>> {
    check_len(m.n(), x.len())?;
    check_len(m.n(), got.len())?;
    check_len(m.n(), want.len())?;
    let mut worst: Option<Deviation> = None;
    for i in 0..m.n() {
        let scale: f64 = m.row(i).map(|(j, v)| (v * x[j]).abs()).sum();
        let diff = (got[i] - want[i]).abs();
        let rel_err = if diff == 0.0 {
            0.0
        } else if scale > 0.0 {
            diff / scale
        } else {
            f64::INFINITY
        };
        if worst.is_none_or(|d| rel_err > d.rel_err || rel_err.is_nan()) {
            worst = Some(Deviation {
                row: i,
                got: got[i],
                want: want[i],
                rel_err,
            });
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convert::{to_dia, to_hdc, to_mhdc};
    use crate::synth::{example_matrix, gen_stencil, StencilKind};
    use crate::CooMatrix;

    const EXAMPLE_Y: [f64; 8] = [25.0, 70.0, 133.0, 40.0, 162.0, 204.0, 167.0, 254.0];

    fn one_to(n: usize) -> Vec<f64> {
        (1..=n).map(|v| v as f64).collect()
    }

    #[test]
    fn example_y_matches_dense_oracle() {
        let a = example_matrix();
        let x = one_to(8);
        let dense = crate::reconstruct_dense(&a).unwrap().matvec(&x).unwrap();
        assert_eq!(dense, EXAMPLE_Y);
    }

    #[test]
    fn every_kernel_on_example() {
        let a = example_matrix();
        let x = one_to(8);
        let w = Workers::sequential();
        for kind in KernelKind::ALL {
            let p = Prepared::build(kind, &a, 0.6, 4).unwrap();
            assert_eq!(p.apply(&x, &w).unwrap(), EXAMPLE_Y, "{kind}");
        }
    }

    #[test]
    fn zero_x_gives_zero_y() {
        let a = example_matrix();
        let w = Workers::sequential();
        for kind in KernelKind::ALL {
            let p = Prepared::build(kind, &a, 0.6, 3).unwrap();
            assert!(p.apply(&[0.0; 8], &w).unwrap().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn identity_returns_x() {
        let x = one_to(6);
        let y = spmv_csr(&CsrMatrix::identity(6), &x, &Workers::sequential()).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn single_lane_is_elementwise_product() {
        let d = DiaMatrix::new(3, vec![0], vec![vec![2.0, 3.0, 4.0]]).unwrap();
        let y = spmv_dia(&d, &[1.0, 2.0, 3.0], &Workers::sequential()).unwrap();
        assert_eq!(y, vec![2.0, 6.0, 12.0]);
    }

    #[test]
    fn zero_filled_lane_slot_contributes_nothing() {
        let d = to_dia(&example_matrix()).unwrap();
        assert_eq!(d.offset(3), 2);
        assert_eq!(d.lane(3)[3], 0.0);
        let y = spmv_dia(&d, &one_to(8), &Workers::sequential()).unwrap();
        assert_eq!(y[3], 40.0);
    }

    #[test]
    fn blocked_dia_matches_dia_bitwise() {
        let a = gen_stencil(StencilKind::P7_3d, 1000).unwrap();
        let d = to_dia(&a).unwrap();
        let x: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let w = Workers::sequential();
        let y = spmv_dia(&d, &x, &w).unwrap();
        for bl in [1, 7, 50, 999, 1000, 5000] {
            let plan = BlockPlan::new(1000, bl).unwrap();
            assert_eq!(spmv_bdia(&d, &plan, &x, &w).unwrap(), y, "bl={bl}");
        }
    }

    #[test]
    fn blocked_hdc_matches_hdc_bitwise() {
        let a = gen_stencil(StencilKind::P5_2d, 300).unwrap();
        let h = to_hdc(&a, 0.99).unwrap();
        let x: Vec<f64> = (0..300).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let w = Workers::sequential();
        let y = spmv_hdc(&h, &x, &w).unwrap();
        for bl in [1, 16, 300] {
            let plan = BlockPlan::new(300, bl).unwrap();
            assert_eq!(spmv_bhdc(&h, &plan, &x, &w).unwrap(), y);
        }
    }

    #[test]
    fn hdc_degenerate_parts() {
        // every offset holds one entry of a lane of length >= 4
        let coo = CooMatrix::new(8, 8, vec![(0, 3, 2.0), (5, 1, -1.0), (2, 2, 4.0)]).unwrap();
        let a = CsrMatrix::from_coo(&coo).unwrap();
        let x = one_to(8);
        let w = Workers::sequential();
        let no_dia = to_hdc(&a, 0.5).unwrap();
        assert_eq!(no_dia.dia().n_diags(), 0);
        assert_eq!(
            spmv_hdc(&no_dia, &x, &w).unwrap(),
            spmv_csr(&a, &x, &w).unwrap()
        );

        let s = gen_stencil(StencilKind::P3_1d, 20).unwrap();
        let x = one_to(20);
        let all_dia = to_hdc(&s, 0.0).unwrap();
        assert_eq!(all_dia.csr().nnz(), 0);
        assert_eq!(
            spmv_hdc(&all_dia, &x, &w).unwrap(),
            spmv_dia(all_dia.dia(), &x, &w).unwrap()
        );
    }

    #[test]
    fn mhdc_single_block_matches_bhdc() {
        let a = gen_stencil(StencilKind::P5_2d, 100).unwrap();
        let x: Vec<f64> = (0..100).map(|i| (i % 13) as f64 - 6.0).collect();
        let w = Workers::sequential();
        let m = to_mhdc(&a, 0.6, 100).unwrap();
        let h = to_hdc(&a, 0.6).unwrap();
        let plan = BlockPlan::new(100, 100).unwrap();
        assert_eq!(
            spmv_mhdc(&m, &x, &w).unwrap(),
            spmv_bhdc(&h, &plan, &x, &w).unwrap()
        );
    }

    #[test]
    fn mhdc_on_3d_stencil_matches_csr() {
        let a = gen_stencil(StencilKind::P7_3d, 1000).unwrap();
        let x: Vec<f64> = (0..1000).map(|i| 1.0 + (i % 5) as f64).collect();
        let w = Workers::sequential();
        let m = to_mhdc(&a, 0.6, 50).unwrap();
        let y = spmv_mhdc(&m, &x, &w).unwrap();
        let r = spmv_csr(&a, &x, &w).unwrap();
        for (a, b) in y.iter().zip(&r) {
            assert!((a - b).abs() <= 1e-13 * b.abs());
        }
    }

    #[test]
    fn dimension_and_plan_errors() {
        let a = example_matrix();
        let w = Workers::sequential();
        assert!(matches!(
            spmv_csr(&a, &[1.0; 7], &w),
            Err(SpmvError::DimensionMismatch {
                expected: 8,
                found: 7
            })
        ));
        let mut y = vec![0.0; 9];
        assert!(spmv_csr_into(&a, &[1.0; 8], &mut y, &w).is_err());
        let d = to_dia(&a).unwrap();
        let plan = BlockPlan::new(9, 4).unwrap();
        assert!(matches!(
            spmv_bdia(&d, &plan, &[1.0; 8], &w),
            Err(SpmvError::PlanMismatch { plan: 9, matrix: 8 })
        ));
        assert!(matches!(
            BlockPlan::new(8, 0),
            Err(SpmvError::ZeroBlockWidth)
        ));
    }

    #[test]
    fn block_plan_partitions_rows() {
        let plan = BlockPlan::new(10, 4).unwrap();
        assert_eq!(plan.ranges().collect::<Vec<_>>(), vec![0..4, 4..8, 8..10]);
        let plan = BlockPlan::new(0, 4).unwrap();
        assert_eq!(plan.n_blocks(), 0);
    }

    #[test]
    fn worker_counts_agree_bitwise() {
        let a = gen_stencil(StencilKind::P7_3d, 729).unwrap();
        let x: Vec<f64> = (0..729).map(|i| (i as f64).sqrt()).collect();
        for kind in KernelKind::ALL {
            let p = Prepared::build(kind, &a, 0.6, 37).unwrap();
            let y1 = p.apply(&x, &Workers::sequential()).unwrap();
            for w in [2, 3, 5] {
                assert_eq!(p.apply(&x, &Workers::new(w)).unwrap(), y1, "{kind} w={w}");
            }
        }
    }

    #[test]
    fn kind_round_trips() {
        for k in KernelKind::ALL {
            assert_eq!(k.name().parse::<KernelKind>().unwrap(), k);
        }
        assert!("ell".parse::<KernelKind>().is_err());
    }

    #[test]
    fn empty_matrix_kernels() {
        let a = CsrMatrix::empty(0);
        let w = Workers::new(2);
        for kind in KernelKind::ALL {
            let p = Prepared::build(kind, &a, 0.5, 4).unwrap();
            assert!(p.apply(&[], &w).unwrap().is_empty());
        }
    }

    #[test]
    fn deviation_is_scaled_by_row_terms() {
        let a = example_matrix();
        let x = one_to(8);
        let want = spmv_csr(&a, &x, &Workers::sequential()).unwrap();
        let exact = worst_deviation(&a, &x, &want, &want).unwrap().unwrap();
        assert_eq!(exact.rel_err, 0.0);
        let mut got = want.clone();
        got[3] += 1.0; // row 3 is 10 * x[3] = 40
        let d = worst_deviation(&a, &x, &got, &want).unwrap().unwrap();
        assert_eq!((d.row, d.rel_err), (3, 1.0 / 40.0));
        let zero = CsrMatrix::empty(2);
        let d = worst_deviation(&zero, &[1.0, 1.0], &[0.0, 1e-300], &[0.0, 0.0])
            .unwrap()
            .unwrap();
        assert_eq!((d.row, d.rel_err), (1, f64::INFINITY));
    }
}
