//! Memory-traffic performance models.
//!
//! Each kernel is assumed to be bandwidth bound, so its run time is the
//! number of bytes moved to and from main memory divided by an effective
//! bandwidth `w_mem`, and the speedup of kernel A over kernel B is
//! `V_B / V_A = 1 + (V_B - V_A) / V_A`. Volumes are split into matrix
//! (`a`), input-vector (`x`) and output-vector (`y`) traffic.
//!
//! Two regimes are modelled:
//!
//! * stencil matrices with `n_diag` full diagonals (`c = n_diag`), where the
//!   reuse of `x` is described by `gamma` in `[1/n_diag, 1]`;
//! * general matrices in a hybrid format, described by the average row
//!   length `c`, the DIA filling rate `alpha`, the CSR rate `beta` and the
//!   per-row `x` traffic `v_x` of the CSR kernel. The hybrid kernels are
//!   assumed to load `x` no more than CSR does.

use crate::index::{INDEX_BYTES, VALUE_BYTES};
use crate::{Result, SpmvError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelInputs {
    /// Bytes per floating-point value.
    pub b_fp: f64,
    /// Bytes per index.
    pub b_int: f64,
    /// Matrix dimension.
    pub n: f64,
    /// Average nonzeros per row.
    pub c: f64,
    /// Number of stored diagonals (stencil regime).
    pub n_diag: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `x` traffic of the CSR kernel, in values per row.
    pub v_x: f64,
}

impl ModelInputs {
    /// Stencil matrix with `n_diag` full diagonals; `v_x = gamma * n_diag`.
    pub fn stencil(n_diag: usize, gamma: f64, n: usize) -> Self {
        let nd = n_diag as f64;
        Self {
            b_fp: VALUE_BYTES as f64,
            b_int: INDEX_BYTES as f64,
            n: n as f64,
            c: nd,
            n_diag: nd,
            gamma,
            alpha: 1.0,
            beta: 0.0,
            v_x: gamma * nd,
        }
    }

    /// General matrix stored in a hybrid format, with `v_x = 1`.
    pub fn hybrid(c: f64, alpha: f64, beta: f64, n: usize) -> Self {
        Self {
            b_fp: VALUE_BYTES as f64,
            b_int: INDEX_BYTES as f64,
            n: n as f64,
            c,
            n_diag: if alpha > 0.0 {
                (1.0 - beta) * c / alpha
            } else {
                0.0
            },
            gamma: 1.0,
            alpha,
            beta,
            v_x: 1.0,
        }
    }

    /// Sets `b_int` so that `b = b_int / b_fp` equals `ratio`.
    pub fn with_b_ratio(mut self, ratio: f64) -> Self {
        self.b_int = ratio * self.b_fp;
        self
    }

    pub fn with_v_x(mut self, v_x: f64) -> Self {
        self.v_x = v_x;
        self
    }

    /// `b = b_int / b_fp`.
    pub fn b(&self) -> f64 {
        self.b_int / self.b_fp
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name, value: f64, ok: bool, range| {
            if ok {
                Ok(())
            } else {
                Err(SpmvError::OutOfRange { name, value, range })
            }
        };
        check("b_fp", self.b_fp, self.b_fp > 0.0, "(0, inf)")?;
        check("b_int", self.b_int, self.b_int > 0.0, "(0, inf)")?;
        check("n", self.n, self.n >= 0.0, "[0, inf)")?;
        check("c", self.c, self.c >= 0.0, "[0, inf)")?;
        check("n_diag", self.n_diag, self.n_diag >= 0.0, "[0, inf)")?;
        check(
            "gamma",
            self.gamma,
            self.gamma > 0.0 && self.gamma <= 1.0,
            "(0, 1]",
        )?;
        check(
            "alpha",
            self.alpha,
            self.alpha > 0.0 && self.alpha <= 1.0,
            "(0, 1]",
        )?;
        check(
            "beta",
            self.beta,
            (0.0..=1.0).contains(&self.beta),
            "[0, 1]",
        )?;
        check("v_x", self.v_x, self.v_x >= 1.0, "[1, inf)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKernel {
    Csr,
    Dia,
    BDia,
    BHdc,
    MHdc,
}

/// Bytes moved for the matrix, the input vector and the output vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeBreakdown {
    pub a: f64,
    pub x: f64,
    pub y: f64,
}

impl VolumeBreakdown {
    pub fn total(&self) -> f64 {
        self.a + self.x + self.y
    }
}

/// Main-memory traffic of one kernel invocation.
///
/// For `MHdc`, `alpha` and `beta` are the block-averaged rates of the
/// M-HDC format; the formula is otherwise the same as for `BHdc`.
pub fn volume(kernel: ModelKernel, m: &ModelInputs) -> Result<VolumeBreakdown> {
    let (bf, b, n, c, nd, g) = (m.b_fp, m.b(), m.n, m.c, m.n_diag, m.gamma);
    let v = match kernel {
        ModelKernel::Csr => VolumeBreakdown {
            a: bf * (c + b * c + b) * n,
            x: bf * m.v_x * n,
            y: bf * n,
        },
        ModelKernel::Dia => VolumeBreakdown {
            a: bf * nd * n,
            x: bf * nd * n,
            y: bf * (1.0 + 2.0 * nd) * n,
        },
        ModelKernel::BDia => VolumeBreakdown {
            a: bf * nd * n,
            x: bf * g * nd * n,
            y: bf * n,
        },
        ModelKernel::BHdc | ModelKernel::MHdc => {
            if m.alpha <= 0.0 {
                return Err(SpmvError::OutOfRange {
                    name: "alpha",
                    value: m.alpha,
                    range: "(0, 1]",
                });
            }
            let beta = m.beta;
            VolumeBreakdown {
                a: bf * (beta * (c + b * c) + b + (1.0 - beta) * c / m.alpha) * n,
                x: bf * m.v_x * n,
                y: bf * n,
            }
        }
    };
    Ok(v)
}

/// Speedup of `fast` over `slow` as the volume ratio `V_slow / V_fast`.
pub fn volume_speedup(fast: ModelKernel, slow: ModelKernel, m: &ModelInputs) -> Result<f64> {
    Ok(volume(slow, m)?.total() / volume(fast, m)?.total())
}

/// Predicted time in seconds for `bytes` at bandwidth `w_mem` bytes/s.
pub fn predicted_time(bytes: f64, w_mem: f64) -> Result<f64> {
    if w_mem > 0.0 {
        Ok(bytes / w_mem)
    } else {
        Err(SpmvError::OutOfRange {
            name: "w_mem",
            value: w_mem,
            range: "(0, inf)",
        })
    }
}

/// DIA over CSR on a stencil matrix:
/// `1 + (b(N+1) - (3 - γ)N) / (4N + 1)`. Never above `(3 + 2b) / 5`.
pub fn speedup_dia_over_csr(m: &ModelInputs) -> f64 {
    let (b, nd, g) = (m.b(), m.n_diag, m.gamma);
    1.0 + (b * (nd + 1.0) - (3.0 - g) * nd) / (4.0 * nd + 1.0)
}

/// B-DIA over CSR on a stencil matrix: `1 + b(N+1) / ((1 + γ)N + 1)`.
pub fn speedup_bdia_over_csr(m: &ModelInputs) -> f64 {
    let (b, nd, g) = (m.b(), m.n_diag, m.gamma);
    1.0 + b * (nd + 1.0) / ((1.0 + g) * nd + 1.0)
}

/// B-DIA over DIA on a stencil matrix: `1 + (3 - γ)N / ((1 + γ)N + 1)`.
pub fn speedup_bdia_over_dia(m: &ModelInputs) -> f64 {
    let (nd, g) = (m.n_diag, m.gamma);
    1.0 + (3.0 - g) * nd / ((1.0 + g) * nd + 1.0)
}

/// Upper estimate of the B-HDC (or M-HDC) speedup over CSR:
///
/// `1 + [b(1-β)c - (1-β)(1/α - 1)c] / [β(c + bc) + b + (1-β)c/α + v_x + 1]`
///
/// The numerator is evaluated as `(1-β)c((b+1)α - 1)/α`, which is the same
/// quantity and vanishes exactly at `α = 1/(b+1)`.
pub fn speedup_hybrid_over_csr(m: &ModelInputs) -> Result<f64> {
    if !(m.alpha > 0.0 && m.alpha <= 1.0) {
        return Err(SpmvError::OutOfRange {
            name: "alpha",
            value: m.alpha,
            range: "(0, 1]",
        });
    }
    let (b, c, a, beta) = (m.b(), m.c, m.alpha, m.beta);
    let kept = (1.0 - beta) * c;
    let num = kept * ((b + 1.0) * a - 1.0) / a;
    let den = beta * (c + b * c) + b + kept / a + m.v_x + 1.0;
    Ok(1.0 + num / den)
}

/// Smallest filling rate at which the hybrid kernels stop losing to CSR.
pub fn alpha_threshold(b: f64) -> f64 {
    1.0 / (b + 1.0)
}

/// `(lower, upper)` = `(1 + b/2, 1 + b)` for B-DIA over CSR.
pub fn bdia_over_csr_bounds(b: f64) -> (f64, f64) {
    (1.0 + b / 2.0, 1.0 + b)
}

/// `(lower, upper)` = `(5/3, 4)` for B-DIA over DIA.
pub fn bdia_over_dia_bounds() -> (f64, f64) {
    (5.0 / 3.0, 4.0)
}

/// Signed relative error of a prediction, `(est - exe) / exe`.
pub fn model_error(rp_est: f64, rp_exe: f64) -> Result<f64> {
    if rp_exe > 0.0 {
        Ok((rp_est - rp_exe) / rp_exe)
    } else {
        Err(SpmvError::OutOfRange {
            name: "rp_exe",
            value: rp_exe,
            range: "(0, inf)",
        })
    }
}

/// The three stencil ratios `(DIA/CSR, B-DIA/CSR, B-DIA/DIA)`.
pub fn stencil_ratios(m: &ModelInputs) -> (f64, f64, f64) {
    (
        speedup_dia_over_csr(m),
        speedup_bdia_over_csr(m),
        speedup_bdia_over_dia(m),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stencil(nd: usize, gamma: f64) -> ModelInputs {
        ModelInputs::stencil(nd, gamma, 1_000_000).with_b_ratio(0.5)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn csr_volume_example() {
        let v = volume(ModelKernel::Csr, &stencil(3, 1.0 / 3.0)).unwrap();
        assert!(close(v.total(), 56e6, 1e-6));
        assert!(close(v.a, 40e6, 1e-6));
        assert!(close(v.x, 8e6, 1e-6));
        assert!(close(v.y, 8e6, 1e-6));
    }

    #[test]
    fn dia_output_volume_example() {
        let m = ModelInputs::stencil(1, 1.0, 10);
        assert_eq!(volume(ModelKernel::Dia, &m).unwrap().y, 240.0);
    }

    #[test]
    fn bdia_best_case_x_matches_csr() {
        let m = stencil(5, 1.0 / 5.0);
        let csr = volume(ModelKernel::Csr, &m).unwrap();
        let bdia = volume(ModelKernel::BDia, &m).unwrap();
        assert_eq!(bdia.x, csr.x);
    }

    #[test]
    fn stencil_ratio_examples() {
        let m = stencil(3, 1.0 / 3.0);
        assert!(close(speedup_bdia_over_csr(&m), 1.4, 1e-12));
        assert!(close(speedup_dia_over_csr(&m), 7.0 / 13.0, 1e-12));
        assert!(close(speedup_bdia_over_dia(&m), 2.6, 1e-12));

        let m = stencil(7, 3.0 / 7.0);
        assert!(close(speedup_bdia_over_csr(&m), 1.0 + 4.0 / 11.0, 1e-12));
        assert!(close(speedup_bdia_over_dia(&m), 1.0 + 18.0 / 11.0, 1e-12));
    }

    #[test]
    fn closed_forms_equal_volume_ratios() {
        for nd in 1..=20 {
            for gi in 0..=10 {
                let g = 1.0 / nd as f64 + (1.0 - 1.0 / nd as f64) * gi as f64 / 10.0;
                let m = stencil(nd, g);
                let via = |f, s| volume_speedup(f, s, &m).unwrap();
                assert!(close(
                    speedup_dia_over_csr(&m),
                    via(ModelKernel::Dia, ModelKernel::Csr),
                    1e-12
                ));
                assert!(close(
                    speedup_bdia_over_csr(&m),
                    via(ModelKernel::BDia, ModelKernel::Csr),
                    1e-12
                ));
                assert!(close(
                    speedup_bdia_over_dia(&m),
                    via(ModelKernel::BDia, ModelKernel::Dia),
                    1e-12
                ));
            }
        }
        for &(c, a, b) in &[
            (10.0, 0.9, 0.2),
            (50.0, 0.7, 0.5),
            (3.0, 1.0, 0.0),
            (100.0, 0.5, 0.9),
        ] {
            let m = ModelInputs::hybrid(c, a, b, 1000).with_b_ratio(0.5);
            let closed = speedup_hybrid_over_csr(&m).unwrap();
            let ratio = volume_speedup(ModelKernel::BHdc, ModelKernel::Csr, &m).unwrap();
            assert!(close(closed, ratio, 1e-12), "{closed} vs {ratio}");
            let ratio = volume_speedup(ModelKernel::MHdc, ModelKernel::Csr, &m).unwrap();
            assert!(close(closed, ratio, 1e-12));
        }
    }

    #[test]
    fn hybrid_examples() {
        let m = |c: f64, a, b| ModelInputs::hybrid(c, a, b, 1).with_b_ratio(0.5);
        assert!(close(
            speedup_hybrid_over_csr(&m(1e9, 1.0, 0.0)).unwrap(),
            1.5,
            1e-3
        ));
        assert!(close(
            speedup_hybrid_over_csr(&m(50.0, 1.0, 0.0)).unwrap(),
            1.0 + 25.0 / 52.5,
            1e-12
        ));
        let a = alpha_threshold(0.5);
        for beta in [0.0, 0.3, 0.99] {
            for c in [1.0, 10.0, 77.0] {
                assert_eq!(speedup_hybrid_over_csr(&m(c, a, beta)).unwrap(), 1.0);
            }
        }
        assert!(speedup_hybrid_over_csr(&m(10.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn empty_dia_part_predicts_no_change() {
        let m = ModelInputs::hybrid(5.0, 1.0, 1.0, 1).with_b_ratio(0.5);
        assert_eq!(speedup_hybrid_over_csr(&m).unwrap(), 1.0);
    }

    #[test]
    fn model_error_examples() {
        assert_eq!(model_error(1.4, 1.4).unwrap(), 0.0);
        assert!(close(model_error(1.3, 1.4).unwrap(), -0.1 / 1.4, 1e-15));
        assert!(close(model_error(1.47, 1.40).unwrap(), 0.05, 1e-12));
        assert!(model_error(1.0, 0.0).is_err());
        assert!(model_error(1.0, -1.0).is_err());
    }

    #[test]
    fn validation() {
        assert!(ModelInputs::hybrid(10.0, 0.9, 0.1, 10).validate().is_ok());
        assert!(ModelInputs::hybrid(10.0, 1.1, 0.1, 10).validate().is_err());
        assert!(ModelInputs::hybrid(10.0, 0.9, -0.1, 10).validate().is_err());
        assert!(ModelInputs::hybrid(10.0, 0.9, 0.1, 10)
            .with_v_x(0.5)
            .validate()
            .is_err());
        assert!(ModelInputs::stencil(3, 0.0, 10).validate().is_err());
        assert!(predicted_time(1e9, 0.0).is_err());
        assert_eq!(predicted_time(1e9, 1e10).unwrap(), 0.1);
    }

    #[test]
    fn default_b_follows_index_width() {
        let m = ModelInputs::hybrid(1.0, 1.0, 0.0, 1);
        assert_eq!(m.b(), INDEX_BYTES as f64 / 8.0);
    }
}
