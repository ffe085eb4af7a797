//! Diagonal censuses and conversions from CSR into DIA, HDC and M-HDC.
//!
//! A diagonal (or, within one row block, a partial diagonal) is moved into
//! the DIA part when `count / length >= theta`, where `length` is `n` for a
//! whole diagonal and the true row count of the block for a partial one.
//! Everything else stays in a CSR remainder, in its original column order.

use std::collections::BTreeMap;

use crate::index::{self, Index};
use crate::matrix::{CsrBuilder, CsrMatrix, DiaMatrix, HdcMatrix, MHdcMatrix, SparseMatrix};
use crate::{Result, SpmvError};

/// Nonzero count per diagonal offset (`j - i`), for offsets with at least
/// one nonzero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DiagonalCensus {
    counts: BTreeMap<isize, usize>,
}

impl DiagonalCensus {
    pub fn from_counts<I: IntoIterator<Item = (isize, usize)>>(counts: I) -> Self {
        Self {
            counts: counts.into_iter().filter(|&(_, c)| c > 0).collect(),
        }
    }

    pub fn get(&self, offset: isize) -> usize {
        self.counts.get(&offset).copied().unwrap_or(0)
    }

    /// Number of nonzero diagonals.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `(offset, count)` in ascending offset order.
    pub fn iter(&self) -> impl Iterator<Item = (isize, usize)> + '_ {
        self.counts.iter().map(|(&d, &c)| (d, c))
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    fn add(&mut self, offset: isize, count: usize) {
        *self.counts.entry(offset).or_insert(0) += count;
    }

    /// Offsets whose diagonal passes `count / len >= theta`, ascending.
    pub fn selected(&self, len: usize, theta: f64) -> Vec<isize> {
        self.iter()
            .filter(|&(_, c)| passes(c, len, theta))
            .map(|(d, _)| d)
            .collect()
    }
}

/// Per-block censuses over row blocks of width `bl`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockCensus {
    n: usize,
    bl: usize,
    blocks: Vec<DiagonalCensus>,
}

impl BlockCensus {
    pub fn bl(&self) -> usize {
        self.bl
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, ib: usize) -> &DiagonalCensus {
        &self.blocks[ib]
    }

    /// True row count of block `ib`; only the last block can be short.
    pub fn block_len(&self, ib: usize) -> usize {
        ((ib + 1) * self.bl).min(self.n) - ib * self.bl
    }

    /// Sums the per-block counts back into a global census.
    pub fn merged(&self) -> DiagonalCensus {
        let mut out = DiagonalCensus::default();
        for b in &self.blocks {
            for (d, c) in b.iter() {
                out.add(d, c);
            }
        }
        out
    }
}

#[inline]
fn passes(count: usize, len: usize, theta: f64) -> bool {
    len > 0 && count as f64 / len as f64 >= theta
}

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

pub fn census_global(m: &CsrMatrix) -> DiagonalCensus {
    let mut census = DiagonalCensus::default();
    for i in 0..m.n() {
        for (j, _) in m.row(i) {
            census.add(j as isize - i as isize, 1);
        }
    }
    census
}

pub fn census_blocked(m: &CsrMatrix, bl: usize) -> Result<BlockCensus> {
    if bl == 0 {
        return Err(SpmvError::ZeroBlockWidth);
    }
    let n = m.n();
    let blocks = (0..n.div_ceil(bl))
        .map(|ib| {
            let mut census = DiagonalCensus::default();
            for i in ib * bl..((ib + 1) * bl).min(n) {
                for (j, _) in m.row(i) {
                    census.add(j as isize - i as isize, 1);
                }
            }
            census
        })
        .collect();
    Ok(BlockCensus { n, bl, blocks })
}

/// Full DIA conversion: one zero-filled lane per nonzero diagonal.
pub fn to_dia(m: &CsrMatrix) -> Result<DiaMatrix> {
    let offsets: Vec<isize> = census_global(m).iter().map(|(d, _)| d).collect();
    let (dia, rest) = split_whole_diagonals(m, &offsets)?;
    debug_assert_eq!(rest.nnz(), 0);
    Ok(dia)
}

pub fn to_hdc(m: &CsrMatrix, theta: f64) -> Result<HdcMatrix> {
    check_theta(theta)?;
    let offsets = census_global(m).selected(m.n(), theta);
    let (dia, csr) = split_whole_diagonals(m, &offsets)?;
    Ok(HdcMatrix::from_parts_unchecked(dia, csr, theta))
}

/// Moves the diagonals listed in `offsets` (ascending) into DIA lanes and
/// returns the remaining entries as CSR.
fn split_whole_diagonals(m: &CsrMatrix, offsets: &[isize]) -> Result<(DiaMatrix, CsrMatrix)> {
    let n = m.n();
    let mut lanes = vec![0.0; n * offsets.len()];
    let mut moved = 0;
    let mut rest = CsrBuilder::with_capacity(n, 0);
    for i in 0..n {
        for (j, v) in m.row(i) {
            match offsets.binary_search(&(j as isize - i as isize)) {
                Ok(k) => {
                    lanes[k * n + i] = v;
                    moved += 1;
                }
                Err(_) => rest.push(j, v)?,
            }
        }
        rest.finish_row()?;
    }
    let offsets = offsets
        .iter()
        .map(|&d| index::from_isize(d))
        .collect::<Result<Vec<Index>>>()?;
    Ok((
        DiaMatrix::from_parts(n, offsets, lanes, moved),
        rest.build(),
    ))
}

pub fn to_mhdc(m: &CsrMatrix, theta: f64, bl: usize) -> Result<MHdcMatrix> {
    check_theta(theta)?;
    if bl == 0 {
        return Err(SpmvError::ZeroBlockWidth);
    }
    let n = m.n();
    let n_blocks = n.div_ceil(bl);
    let mut dia_ptr: Vec<Index> = Vec::with_capacity(n_blocks + 1);
    dia_ptr.push(0);
    let mut dia_offsets: Vec<Index> = Vec::new();
    let mut segments: Vec<f64> = Vec::new();
    let mut moved = 0;
    let mut rest = CsrBuilder::with_capacity(n, 0);

    for ib in 0..n_blocks {
        let rows = ib * bl..((ib + 1) * bl).min(n);
        let mut census = DiagonalCensus::default();
        for i in rows.clone() {
            for (j, _) in m.row(i) {
                census.add(j as isize - i as isize, 1);
            }
        }
        let selected = census.selected(rows.len(), theta);
        let first = dia_offsets.len();
        segments.resize(segments.len() + selected.len() * bl, 0.0);
        for &d in &selected {
            dia_offsets.push(index::from_isize(d)?);
        }
        for i in rows.clone() {
            for (j, v) in m.row(i) {
                match selected.binary_search(&(j as isize - i as isize)) {
                    Ok(k) => {
                        segments[(first + k) * bl + (i - rows.start)] = v;
                        moved += 1;
                    }
                    Err(_) => rest.push(j, v)?,
                }
            }
            rest.finish_row()?;
        }
        dia_ptr.push(index::from_usize(dia_offsets.len())?);
    }
    Ok(MHdcMatrix::from_parts_unchecked(
        n,
        bl,
        dia_ptr,
        dia_offsets,
        segments,
        rest.build(),
        theta,
        moved,
    ))
}

/// DIA-part filling rate and CSR rate of a hybrid matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    /// Original nonzeros in the DIA part divided by its slot count. Defined as
    /// 1 when the DIA part is empty (there are no padded slots).
    pub alpha: f64,
    /// Fraction of all nonzeros left in the CSR part.
    pub beta: f64,
    /// Number of stored diagonals (HDC) or partial-diagonal segments (M-HDC).
    pub n_diag: usize,
    /// Number of DIA-part value slots inside the matrix.
    pub n_diag_slots: usize,
}

/// Shared shape of [`HdcMatrix`] and [`MHdcMatrix`].
pub trait HybridFormat: SparseMatrix {
    fn dia_part_nnz(&self) -> usize;
    fn dia_part_count(&self) -> usize;
    fn dia_part_slots(&self) -> usize;
    fn csr_part(&self) -> &CsrMatrix;
}

impl HybridFormat for HdcMatrix {
    fn dia_part_nnz(&self) -> usize {
        self.dia().nnz()
    }

    fn dia_part_count(&self) -> usize {
        self.dia().n_diags()
    }

    fn dia_part_slots(&self) -> usize {
        self.dia().n_diags() * self.n()
    }

    fn csr_part(&self) -> &CsrMatrix {
        self.csr()
    }
}

impl HybridFormat for MHdcMatrix {
    fn dia_part_nnz(&self) -> usize {
        self.dia_nnz()
    }

    fn dia_part_count(&self) -> usize {
        self.n_segments()
    }

    fn dia_part_slots(&self) -> usize {
        self.dia_slots()
    }

    fn csr_part(&self) -> &CsrMatrix {
        self.csr()
    }
}

pub fn rates<H: HybridFormat + ?Sized>(h: &H) -> Result<Rates> {
    let nnz = h.nnz();
    if nnz == 0 {
        return Err(SpmvError::EmptyMatrix);
    }
    let slots = h.dia_part_slots();
    let alpha = if slots == 0 {
        1.0
    } else {
        h.dia_part_nnz() as f64 / slots as f64
    };
    Ok(Rates {
        alpha,
        beta: h.csr_part().nnz() as f64 / nnz as f64,
        n_diag: h.dia_part_count(),
        n_diag_slots: slots,
    })
}
