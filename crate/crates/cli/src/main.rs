//! `diaspmv`: generate, analyse and benchmark diagonal-aware SpMV formats.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use diaspmv::bench::{membench, time_spmv, MemMode, TimingConfig};
use diaspmv::convert::{self, Rates};
use diaspmv::io::{self, ReportRow, SweepRow};
use diaspmv::kernels::{spmv_csr, worst_deviation, KernelKind, Prepared};
use diaspmv::matrix::reconstruct_dense_capped;
use diaspmv::perfmodel::{self, ModelInputs};
use diaspmv::synth::{gen_stencil, StencilKind};
use diaspmv::{CsrMatrix, SparseMatrix, SpmvError, Workers};

/// Environment variable capping the size of the dense verification oracle.
const DENSE_CAP_VAR: &str = "DIASPMV_DENSE_CAP";
const DEFAULT_CLI_DENSE_CAP: usize = 2000;
const VERIFY_TOL: f64 = 1e-13;

#[derive(Parser, Debug)]
#[command(
    name = "diaspmv",
    version,
    about = "Diagonal-aware sparse matrix-vector multiplication"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a stencil matrix in Matrix Market format.
    Gen {
        #[arg(long)]
        kind: StencilKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report diagonal structure, rates and predicted speedup over a (theta, bl) grid.
    Analyze {
        #[command(flatten)]
        source: Source,
        #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = [0.5, 0.6, 0.7, 0.8, 0.9])]
        theta: Vec<f64>,
        #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = [10, 50, 100, 500, 1000, 5000, 10000])]
        bl: Vec<usize>,
        #[command(flatten)]
        model: ModelFlags,
        /// CSV file receiving one row per grid point.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time a kernel against the CSR baseline.
    Bench {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "mhdc")]
        kernel: KernelKind,
        #[arg(long, default_value_t = 0.6)]
        theta: f64,
        #[arg(long, default_value_t = 100)]
        bl: usize,
        #[command(flatten)]
        timing: TimingFlags,
        /// Check the kernel output against CSR (and a dense oracle for small n) before timing.
        #[arg(long)]
        verify: bool,
        #[command(flatten)]
        model: ModelFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure direct or indirect streaming bandwidth.
    Membench {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "direct")]
        mode: MemMode,
        #[command(flatten)]
        timing: TimingFlags,
    },
    /// Evaluate the performance model.
    Predict {
        /// Stencil whose DIA/B-DIA/CSR ratios to print, or `all`.
        #[arg(long, conflicts_with_all = ["c", "alpha", "beta", "vx"])]
        stencil: Option<String>,
        /// Average nonzeros per row.
        #[arg(long, default_value_t = 50.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// `x` traffic of the CSR kernel in values per row.
        #[arg(long, default_value_t = 1.0)]
        vx: f64,
        #[arg(long, default_value_t = 0.5)]
        b_ratio: f64,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct SourceSel {
    /// Matrix Market input.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Generate a stencil instead of reading a file.
    #[arg(long, requires = "n")]
    gen: Option<StencilKind>,
}

#[derive(Args, Debug)]
struct Source {
    #[command(flatten)]
    sel: SourceSel,
    /// Dimension of the generated stencil.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug)]
struct TimingFlags {
    #[arg(long, default_value_t = Workers::available())]
    workers: usize,
    #[arg(long, default_value_t = 20)]
    n_loops: usize,
    #[arg(long, default_value_t = 1000)]
    n_ites: usize,
}

impl TimingFlags {
    fn config(&self) -> Result<TimingConfig, SpmvError> {
        TimingConfig::new(self.n_loops, self.n_ites, self.workers)
    }
}

#[derive(Args, Debug)]
struct ModelFlags {
    /// `b_int / b_fp` used by the model; defaults to the index width in use.
    #[arg(long)]
    b_ratio: Option<f64>,
}

impl ModelFlags {
    fn apply(&self, m: ModelInputs) -> ModelInputs {
        match self.b_ratio {
            Some(r) => m.with_b_ratio(r),
            None => m,
        }
    }
}

struct Loaded {
    name: String,
    matrix: CsrMatrix,
    stencil: Option<StencilKind>,
}

impl Source {
    fn load(&self) -> Result<Loaded, SpmvError> {
        if let Some(path) = &self.sel.input {
            let coo = io::read_matrix_market(path)?;
            return Ok(Loaded {
                name: path.display().to_string(),
                matrix: CsrMatrix::from_coo(&coo)?,
                stencil: None,
            });
        }
        let kind = self.sel.gen.expect("clap enforces a source");
        let n = self.n.expect("clap enforces --n with --gen");
        Ok(Loaded {
            name: format!("{kind}_n{n}"),
            matrix: gen_stencil(kind, n)?,
            stencil: Some(kind),
        })
    }
}

enum Failure {
    Data(SpmvError),
    Verify(String),
}

impl From<SpmvError> for Failure {
    fn from(e: SpmvError) -> Self {
        match e {
            SpmvError::Verification(msg) => Self::Verify(msg),
            other => Self::Data(other),
        }
    }
}

/// Fixed-point rendering with six significant digits.
fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0.00000".to_owned();
    }
    let mag = v.abs().log10().floor() as i32;
    let decimals = (5 - mag).max(0) as usize;
    format!("{v:.decimals$}")
}

fn opt6(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), sig6)
}

fn hybrid_estimate(m: &CsrMatrix, r: &Rates, model: &ModelFlags) -> Result<f64, SpmvError> {
    let inputs = model.apply(ModelInputs::hybrid(m.avg_row_nnz(), r.alpha, r.beta, m.n()));
    inputs.validate()?;
    perfmodel::speedup_hybrid_over_csr(&inputs)
}

fn cmd_gen(kind: StencilKind, n: usize, out: &PathBuf) -> Result<(), Failure> {
    let m = gen_stencil(kind, n)?;
    io::write_matrix_market(&m, out)?;
    println!("{kind} n={n} nnz={} -> {}", m.nnz(), out.display());
    Ok(())
}

fn cmd_analyze(
    source: &Source,
    thetas: &[f64],
    bls: &[usize],
    model: &ModelFlags,
    out: Option<&PathBuf>,
) -> Result<(), Failure> {
    let Loaded {
        name, matrix: m, ..
    } = source.load()?;
    let mut rows = Vec::with_capacity(thetas.len() * bls.len());
    for &theta in thetas {
        let hdc = convert::to_hdc(&m, theta)?;
        let rh = convert::rates(&hdc)?;
        let rp_h = hybrid_estimate(&m, &rh, model)?;
        for &bl in bls {
            let mh = convert::to_mhdc(&m, theta, bl)?;
            let rm = convert::rates(&mh)?;
            rows.push(SweepRow {
                matrix: name.clone(),
                theta,
                bl,
                n: m.n(),
                nnz: m.nnz(),
                n_diag: rh.n_diag,
                alpha_hdc: rh.alpha,
                beta_hdc: rh.beta,
                rp_est_hdc: rp_h,
                n_seg: rm.n_diag,
                alpha_mhdc: rm.alpha,
                beta_mhdc: rm.beta,
                rp_est_mhdc: hybrid_estimate(&m, &rm, model)?,
            });
        }
    }
    println!(
        "matrix {name}: n={} nnz={} c={}",
        m.n(),
        m.nnz(),
        sig6(m.avg_row_nnz())
    );
    println!("theta\tbl\tN_diag\talpha\tbeta\tRP_est\tN_seg\talpha~\tbeta~\tRP_est~");
    for r in &rows {
        println!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            sig6(r.theta),
            r.bl,
            r.n_diag,
            sig6(r.alpha_hdc),
            sig6(r.beta_hdc),
            sig6(r.rp_est_hdc),
            r.n_seg,
            sig6(r.alpha_mhdc),
            sig6(r.beta_mhdc),
            sig6(r.rp_est_mhdc),
        );
    }
    if let Some(path) = out {
        io::write_sweep(&rows, path)?;
    }
    Ok(())
}

fn dense_cap() -> usize {
    std::env::var(DENSE_CAP_VAR)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_CLI_DENSE_CAP)
}

fn check(m: &CsrMatrix, x: &[f64], got: &[f64], want: &[f64], what: &str) -> Result<(), Failure> {
    if let Some(d) = worst_deviation(m, x, got, want)? {
        let within = d.rel_err <= VERIFY_TOL;
        if !within {
            return Err(Failure::Verify(format!(
                "{what}: worst component y[{}] = {:e}, expected {:e} (scaled error {:e} > {VERIFY_TOL:e})",
                d.row, d.got, d.want, d.rel_err
            )));
        }
    }
    Ok(())
}

fn verify(kernel: &Prepared<'_>, m: &CsrMatrix, x: &[f64], w: &Workers) -> Result<(), Failure> {
    let got = kernel.apply(x, w)?;
    let want = spmv_csr(m, x, &Workers::sequential())?;
    check(m, x, &got, &want, "csr reference")?;
    let cap = dense_cap();
    if m.n() <= cap {
        let dense = reconstruct_dense_capped(m, cap)?.matvec(x)?;
        check(m, x, &got, &dense, "dense oracle")?;
    }
    println!("verify: {} matches reference", kernel.kind());
    Ok(())
}

fn bench_input(n: usize) -> Vec<f64> {
    (0..n).map(|i| 1.0 + (i % 10) as f64 / 10.0).collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    source: &Source,
    kind: KernelKind,
    theta: f64,
    bl: usize,
    timing: &TimingFlags,
    do_verify: bool,
    model: &ModelFlags,
    out: Option<&PathBuf>,
) -> Result<(), Failure> {
    let cfg = timing.config()?;
    let Loaded {
        name,
        matrix: m,
        stencil,
    } = source.load()?;
    let x = bench_input(m.n());
    let kernel = Prepared::build(kind, &m, theta, bl)?;
    if do_verify {
        verify(&kernel, &m, &x, &Workers::new(cfg.workers))?;
    }
    let base = Prepared::build(KernelKind::Csr, &m, theta, bl)?;
    let (base_t, _) = time_spmv(&base, &x, &cfg)?;
    let (t, _) = time_spmv(&kernel, &x, &cfg)?;

    let rates = kernel.rates().transpose()?;
    let rp_est = match (kind, stencil, &rates) {
        (KernelKind::BHdc | KernelKind::MHdc, _, Some(r)) => Some(hybrid_estimate(&m, r, model)?),
        (KernelKind::Dia | KernelKind::BDia, Some(s), _) => {
            let inputs = model.apply(ModelInputs::stencil(s.n_diag(), s.model_gamma(), m.n()));
            Some(match kind {
                KernelKind::Dia => perfmodel::speedup_dia_over_csr(&inputs),
                _ => perfmodel::speedup_bdia_over_csr(&inputs),
            })
        }
        _ => None,
    };
    let rp = base_t.best_time_s / t.best_time_s;
    let rel_err = rp_est.map(|e| perfmodel::model_error(e, rp)).transpose()?;

    let mut base_row = ReportRow::new(&name, "csr", m.n(), m.nnz());
    base_row.workers = Some(cfg.workers);
    base_row.time_s = Some(base_t.best_time_s);
    base_row.gflops = Some(base_t.gflops);
    base_row.rp_vs_csr = Some(1.0);
    let mut row = ReportRow::new(&name, kind.name(), m.n(), m.nnz());
    row.workers = Some(cfg.workers);
    if matches!(kind, KernelKind::Hdc | KernelKind::BHdc | KernelKind::MHdc) {
        row.theta = Some(theta);
    }
    if matches!(kind, KernelKind::BDia | KernelKind::BHdc | KernelKind::MHdc) {
        row.bl = Some(bl);
    }
    row.alpha = rates.map(|r| r.alpha);
    row.beta = rates.map(|r| r.beta);
    row.time_s = Some(t.best_time_s);
    row.gflops = Some(t.gflops);
    row.rp_vs_csr = Some(rp);
    row.rp_est = rp_est;
    row.rel_err = rel_err;

    println!(
        "matrix {name}: n={} nnz={} workers={}",
        m.n(),
        m.nnz(),
        cfg.workers
    );
    println!("kernel\ttime_s\tgflops\tRP\tRP_est\tRE");
    for r in [&base_row, &row] {
        println!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.kernel,
            opt6(r.time_s),
            opt6(r.gflops),
            opt6(r.rp_vs_csr),
            opt6(r.rp_est),
            opt6(r.rel_err)
        );
    }
    if let Some(path) = out {
        io::write_report(&[base_row, row], path)?;
    }
    Ok(())
}

fn cmd_membench(n: usize, mode: MemMode, timing: &TimingFlags) -> Result<(), Failure> {
    let cfg = timing.config()?;
    let m = membench(n, mode, &cfg)?;
    let bps = m.bytes_per_s.unwrap_or(f64::NAN);
    println!(
        "{mode} n={n} M={} time_s={} bytes_per_s={} GB/s={}",
        mode.bytes_per_element(),
        sig6(m.best_time_s),
        sig6(bps),
        sig6(bps / 1e9)
    );
    Ok(())
}

fn cmd_predict(
    stencil: Option<&str>,
    c: f64,
    alpha: f64,
    beta: f64,
    vx: f64,
    b_ratio: f64,
) -> Result<(), Failure> {
    if let Some(s) = stencil {
        let kinds: Vec<StencilKind> = if s == "all" {
            StencilKind::ALL.to_vec()
        } else {
            vec![s.parse()?]
        };
        println!("stencil\tN_diag\tgamma\tDIA/CSR\tB-DIA/CSR\tB-DIA/DIA");
        for k in kinds {
            let m = ModelInputs::stencil(k.n_diag(), k.model_gamma(), 0).with_b_ratio(b_ratio);
            m.validate()?;
            let (dia, bdia, bdia_dia) = perfmodel::stencil_ratios(&m);
            println!(
                "{k}\t{}\t{}\t{}\t{}\t{}",
                k.n_diag(),
                sig6(k.model_gamma()),
                sig6(dia),
                sig6(bdia),
                sig6(bdia_dia)
            );
        }
        return Ok(());
    }
    let m = ModelInputs::hybrid(c, alpha, beta, 0)
        .with_b_ratio(b_ratio)
        .with_v_x(vx);
    m.validate()?;
    let rp = perfmodel::speedup_hybrid_over_csr(&m)?;
    println!(
        "c={} alpha={} beta={} b={} v_x={} alpha_min={} RP_est={}",
        sig6(c),
        sig6(alpha),
        sig6(beta),
        sig6(b_ratio),
        sig6(vx),
        sig6(perfmodel::alpha_threshold(b_ratio)),
        sig6(rp)
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen { kind, n, out } => cmd_gen(kind, n, &out),
        Command::Analyze {
            source,
            theta,
            bl,
            model,
            out,
        } => cmd_analyze(&source, &theta, &bl, &model, out.as_ref()),
        Command::Bench {
            source,
            kernel,
            theta,
            bl,
            timing,
            verify,
            model,
            out,
        } => cmd_bench(
            &source,
            kernel,
            theta,
            bl,
            &timing,
            verify,
            &model,
            out.as_ref(),
        ),
        Command::Membench { n, mode, timing } => cmd_membench(n, mode, &timing),
        Command::Predict {
            stencil,
            c,
            alpha,
            beta,
            vx,
            b_ratio,
        } => cmd_predict(stencil.as_deref(), c, alpha, beta, vx, b_ratio),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Verify(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(3)
        }
    }
}
