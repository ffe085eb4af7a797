//! Test and benchmark matrices: finite-difference stencils and the 8x8
//! example matrix.

use std::fmt;
use std::str::FromStr;

use crate::matrix::{CsrBuilder, CsrMatrix};
use crate::{Result, SpmvError};

#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StencilKind {
    /// 1D 3-point: offsets `{0, ±1}`.
    P3_1d,
    /// 2D 5-point: offsets `{0, ±1, ±nx}` with `nx = floor(sqrt(n))`.
    P5_2d,
    /// 3D 7-point: offsets `{0, ±1, ±nx, ±nx²}` with `nx = floor(cbrt(n))`.
    P7_3d,
}

impl StencilKind {
    pub const ALL: [StencilKind; 3] = [Self::P3_1d, Self::P5_2d, Self::P7_3d];

    /// Number of diagonals for a grid large enough that no offsets coincide.
    pub fn n_diag(self) -> usize {
        match self {
            Self::P3_1d => 3,
            Self::P5_2d => 5,
            Self::P7_3d => 7,
        }
    }

    /// x-traffic factor used when predicting stencil speedups. The two
    /// `±nx²` diagonals of the 3D stencil are too far apart for reuse, hence
    /// 3/7 rather than 1/7.
    pub fn model_gamma(self) -> f64 {
        match self {
            Self::P3_1d => 1.0 / 3.0,
            Self::P5_2d => 1.0 / 5.0,
            Self::P7_3d => 3.0 / 7.0,
        }
    }

    /// Distinct diagonal offsets for dimension `n`, ascending.
    pub fn offsets(self, n: usize) -> Vec<isize> {
        let mut offs = vec![0isize, 1, -1];
        match self {
            Self::P3_1d => {}
            Self::P5_2d => {
                let nx = n.isqrt() as isize;
                offs.extend([nx, -nx]);
            }
            Self::P7_3d => {
                let nx = icbrt(n) as isize;
                offs.extend([nx, -nx, nx * nx, -nx * nx]);
            }
        }
        offs.sort_unstable();
        offs.dedup();
        offs
    }
}

impl fmt::Display for StencilKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::P3_1d => "p3_1d",
            Self::P5_2d => "p5_2d",
            Self::P7_3d => "p7_3d",
        })
    }
}

impl FromStr for StencilKind {
    type Err = SpmvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p3_1d" => Ok(Self::P3_1d),
            "p5_2d" => Ok(Self::P5_2d),
            "p7_3d" => Ok(Self::P7_3d),
            other => Err(SpmvError::Unsupported(format!("stencil kind `{other}`"))),
        }
    }
}

/// Largest `r` with `r³ <= n`.
fn icbrt(n: usize) -> usize {
    let mut r = (n as f64).cbrt().round() as usize;
    while r > 0 && r.checked_pow(3).is_none_or(|c| c > n) {
        r -= 1;
    }
    while (r + 1).checked_pow(3).is_some_and(|c| c <= n) {
        r += 1;
    }
    r
}

/// Deterministic stencil coefficient, always in `1..=7`.
#[inline]
pub fn stencil_value(i: usize, j: usize) -> f64 {
    let h = (i as u64)
        .wrapping_mul(31)
        .wrapping_add((j as u64).wrapping_mul(17))
        % 7;
    (1 + h) as f64
}

/// `n x n` stencil matrix. Columns outside `[0, n)` are dropped, never
/// wrapped.
pub fn gen_stencil(kind: StencilKind, n: usize) -> Result<CsrMatrix> {
    if n == 0 {
        return Err(SpmvError::OutOfRange {
            name: "n",
            value: 0.0,
            range: ">= 1",
        });
    }
    let offs = kind.offsets(n);
    let mut b = CsrBuilder::with_capacity(n, n * offs.len());
    for i in 0..n {
        for &off in &offs {
            let j = i as isize + off;
            if (0..n as isize).contains(&j) {
                b.push(j as usize, stencil_value(i, j as usize))?;
            }
        }
        b.finish_row()?;
    }
    Ok(b.build())
}

/// The 8x8 demonstration matrix with values 1..=20 in row-major order.
pub fn example_matrix() -> CsrMatrix {
    CsrMatrix::new(
        8,
        vec![0, 3, 6, 9, 10, 13, 15, 17, 20],
        vec![0, 2, 5, 1, 3, 6, 2, 4, 7, 3, 0, 4, 6, 5, 7, 2, 6, 0, 3, 7],
        (1..=20).map(f64::from).collect(),
    )
    .expect("example matrix is well formed")
}
