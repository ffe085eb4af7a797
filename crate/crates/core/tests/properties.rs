use diaspmv::convert::{census_blocked, census_global, rates, to_dia, to_hdc, to_mhdc};
use diaspmv::io::{parse_matrix_market, write_matrix_market_to};
use diaspmv::kernels::{KernelKind, Prepared};
use diaspmv::perfmodel::{alpha_threshold, speedup_hybrid_over_csr, ModelInputs};
use diaspmv::{reconstruct_dense, CooMatrix, CsrMatrix, SparseMatrix, Workers};
use proptest::prelude::*;

/// Square matrices up to 40x40 with small integer values, so every kernel
/// sum is exact and orderings cannot change results.
fn matrix() -> impl Strategy<Value = CsrMatrix> {
    (1usize..40)
        .prop_flat_map(|n| {
            let max = n * n / 2 + 1;
            (
                Just(n),
                prop::collection::vec((0..n, 0..n, -8i32..8), 0..max),
            )
        })
        .prop_map(|(n, e)| {
            let entries = e.into_iter().map(|(i, j, v)| (i, j, v as f64)).collect();
            CsrMatrix::from_coo(&CooMatrix::new(n, n, entries).unwrap()).unwrap()
        })
}

fn input(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i % 5) as f64 - 2.0).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn every_format_reconstructs_the_matrix(m in matrix(), theta in 0.0f64..=1.0, bl in 1usize..50) {
        let dense = reconstruct_dense(&m).unwrap();
        prop_assert_eq!(&reconstruct_dense(&to_dia(&m).unwrap()).unwrap(), &dense);
        let h = to_hdc(&m, theta).unwrap();
        prop_assert_eq!(&reconstruct_dense(&h).unwrap(), &dense);
        let mh = to_mhdc(&m, theta, bl).unwrap();
        prop_assert_eq!(&reconstruct_dense(&mh).unwrap(), &dense);
        prop_assert_eq!(h.dia().nnz() + h.csr().nnz(), m.nnz());
        prop_assert_eq!(mh.dia_nnz() + mh.csr().nnz(), m.nnz());
    }

    #[test]
    fn kernels_match_dense_oracle(m in matrix(), theta in 0.0f64..=1.0, bl in 1usize..50, workers in 1usize..4) {
        let x = input(m.n());
        let want = reconstruct_dense(&m).unwrap().matvec(&x).unwrap();
        let w = Workers::new(workers);
        for kind in KernelKind::ALL {
            let p = Prepared::build(kind, &m, theta, bl).unwrap();
            prop_assert_eq!(&p.apply(&x, &w).unwrap(), &want, "{}", kind);
        }
    }

    #[test]
    fn blocked_census_sums_to_global(m in matrix(), bl in 1usize..50) {
        let b = census_blocked(&m, bl).unwrap();
        prop_assert_eq!(b.merged(), census_global(&m));
        prop_assert_eq!(census_global(&m).total(), m.nnz());
    }

    #[test]
    fn csr_rate_grows_with_theta(m in matrix(), bl in 1usize..50, t0 in 0.0f64..=1.0, t1 in 0.0f64..=1.0) {
        prop_assume!(m.nnz() > 0);
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        let beta = |t| rates(&to_hdc(&m, t).unwrap()).unwrap().beta;
        let beta_m = |t| rates(&to_mhdc(&m, t, bl).unwrap()).unwrap().beta;
        prop_assert!(beta(lo) <= beta(hi));
        prop_assert!(beta_m(lo) <= beta_m(hi));
    }

    #[test]
    fn rates_are_in_range(m in matrix(), theta in 0.0f64..=1.0, bl in 1usize..50) {
        prop_assume!(m.nnz() > 0);
        for r in [rates(&to_hdc(&m, theta).unwrap()).unwrap(), rates(&to_mhdc(&m, theta, bl).unwrap()).unwrap()] {
            prop_assert!(r.alpha > 0.0 && r.alpha <= 1.0);
            prop_assert!((0.0..=1.0).contains(&r.beta));
            prop_assert!(r.alpha >= theta || r.n_diag == 0);
        }
    }

    #[test]
    fn matrix_market_round_trip(m in matrix()) {
        let mut buf = Vec::new();
        write_matrix_market_to(&m, &mut buf).unwrap();
        let back = CsrMatrix::from_coo(&parse_matrix_market(&buf[..]).unwrap()).unwrap();
        // explicit zeros are not written
        let mut nonzero = Vec::new();
        m.for_each_stored(&mut |i, j, v| if v != 0.0 { nonzero.push((i, j, v)) });
        let expected = CsrMatrix::from_coo(&CooMatrix::new(m.n(), m.n(), nonzero).unwrap()).unwrap();
        prop_assert_eq!(back, expected);
    }

    #[test]
    fn hybrid_model_monotone(
        c in 1.0f64..1e4,
        b in 0.1f64..2.0,
        a0 in 0.01f64..=1.0,
        a1 in 0.01f64..=1.0,
        b0 in 0.0f64..=1.0,
        b1 in 0.0f64..=1.0,
    ) {
        let rp = |alpha, beta| {
            speedup_hybrid_over_csr(&ModelInputs::hybrid(c, alpha, beta, 1).with_b_ratio(b)).unwrap()
        };
        let (alo, ahi) = if a0 <= a1 { (a0, a1) } else { (a1, a0) };
        let (blo, bhi) = if b0 <= b1 { (b0, b1) } else { (b1, b0) };
        prop_assert!(rp(alo, blo) <= rp(ahi, blo) * (1.0 + 1e-12));
        prop_assert!(rp(ahi, bhi) < 1.0 + b);
        // beta only hurts once the DIA part pays for its own padding
        let thr = alpha_threshold(b);
        let a = thr + (1.0 - thr) * ahi;
        prop_assert!(rp(a, bhi) <= rp(a, blo) * (1.0 + 1e-12));
    }
}
