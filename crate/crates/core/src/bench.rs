//! Best-of-N timing and the direct/indirect memory bandwidth benchmark.
//!
//! A measurement runs `n_loops` loops; each loop times `n_ites` back-to-back
//! calls and records the average time of one call. The reported time is the
//! fastest loop. One extra untimed loop runs first to fault in pages and
//! warm caches.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::index::{self, Index, INDEX_BYTES, VALUE_BYTES};
use crate::kernels::Prepared;
use crate::{Result, SpmvError, Workers};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimingConfig {
    pub n_loops: usize,
    pub n_ites: usize,
    pub workers: usize,
    pub warmup: bool,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            n_loops: 20,
            n_ites: 1000,
            workers: Workers::available(),
            warmup: true,
        }
    }
}

impl TimingConfig {
    pub fn new(n_loops: usize, n_ites: usize, workers: usize) -> Result<Self> {
        let cfg = Self {
            n_loops,
            n_ites,
            workers,
            warmup: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_loops", self.n_loops),
            ("n_ites", self.n_ites),
            ("workers", self.workers),
        ] {
            if v == 0 {
                return Err(SpmvError::OutOfRange {
                    name,
                    value: 0.0,
                    range: ">= 1",
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    /// Fastest per-call average over all loops.
    pub best_time_s: f64,
    /// Per-call average of each loop, in order.
    pub loop_times: Vec<f64>,
    pub gflops: f64,
    /// Only set by the memory benchmark.
    pub bytes_per_s: Option<f64>,
}

impl Measurement {
    /// Builds a measurement from per-loop averages and the floating-point
    /// operations done by one call.
    pub fn from_loop_times(loop_times: Vec<f64>, flops_per_call: f64) -> Self {
        let best_time_s = best_of(&loop_times);
        Self {
            best_time_s,
            gflops: flops_per_call / best_time_s / 1e9,
            loop_times,
            bytes_per_s: None,
        }
    }
}

/// Minimum of the loop times (`inf` for an empty slice).
pub fn best_of(loop_times: &[f64]) -> f64 {
    loop_times.iter().copied().fold(f64::INFINITY, f64::min)
}

/// SpMV rate in GFLOP/s: two operations per nonzero.
pub fn gflops(nnz: usize, time_s: f64) -> f64 {
    2.0 * nnz as f64 / time_s / 1e9
}

/// Source of timestamps in seconds.
pub trait Clock {
    fn now(&self) -> f64;
}

/// Monotonic wall clock.
#[derive(Debug, Clone, Copy)]
pub struct WallClock(Instant);

impl WallClock {
    pub fn new() -> Self {
        Self(Instant::now())
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

pub fn time_kernel<F>(cfg: &TimingConfig, flops_per_call: f64, thunk: F) -> Result<Measurement>
where
    F: FnMut() -> Result<()>,
{
    time_kernel_with(cfg, flops_per_call, &WallClock::new(), thunk)
}

pub fn time_kernel_with<C, F>(
    cfg: &TimingConfig,
    flops_per_call: f64,
    clock: &C,
    mut thunk: F,
) -> Result<Measurement>
where
    C: Clock + ?Sized,
    F: FnMut() -> Result<()>,
{
    cfg.validate()?;
    if cfg.warmup {
        for _ in 0..cfg.n_ites {
            thunk()?;
        }
    }
    let mut loop_times = Vec::with_capacity(cfg.n_loops);
    for _ in 0..cfg.n_loops {
        let t0 = clock.now();
        for _ in 0..cfg.n_ites {
            thunk()?;
        }
        let t1 = clock.now();
        loop_times.push((t1 - t0) / cfg.n_ites as f64);
    }
    Ok(Measurement::from_loop_times(loop_times, flops_per_call))
}

/// Times `kernel` on `x`, reusing one output vector for every call, and
/// returns the measurement together with the final output.
pub fn time_spmv(
    kernel: &Prepared<'_>,
    x: &[f64],
    cfg: &TimingConfig,
) -> Result<(Measurement, Vec<f64>)> {
    let workers = Workers::new(cfg.workers);
    let mut y = vec![0.0; kernel.n()];
    let m = time_kernel(cfg, 2.0 * kernel.nnz() as f64, || {
        kernel.apply_into(x, &mut y, &workers)
    })?;
    Ok((m, y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MemMode {
    /// `C[i] += A[i] * B[i]`
    Direct,
    /// `C[i] += A[i] * B[I[i]]` with `I[i] = i`
    Indirect,
}

impl MemMode {
    /// Bytes counted per element: three value loads and one value store,
    /// plus one index load for the indirect kernel.
    pub fn bytes_per_element(self) -> usize {
        match self {
            Self::Direct => 4 * VALUE_BYTES,
            Self::Indirect => 4 * VALUE_BYTES + INDEX_BYTES,
        }
    }
}

impl fmt::Display for MemMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Direct => "direct",
            Self::Indirect => "indirect",
        })
    }
}

impl FromStr for MemMode {
    type Err = SpmvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Self::Direct),
            "indirect" => Ok(Self::Indirect),
            other => Err(SpmvError::Unsupported(format!(
                "memory benchmark mode `{other}`"
            ))),
        }
    }
}

fn alloc_filled<T: Clone>(n: usize, v: T) -> Result<Vec<T>> {
    let mut out = Vec::new();
    out.try_reserve_exact(n)
        .map_err(|_| SpmvError::Allocation(n))?;
    out.resize(n, v);
    Ok(out)
}

/// Arrays of the memory benchmark. `A` and `B` are all ones and `C` starts
/// at zero, so after `k` steps every `C[i]` equals `k` exactly.
#[derive(Debug, Clone)]
pub struct MemArrays {
    mode: MemMode,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    idx: Vec<Index>,
}

impl MemArrays {
    pub fn new(n: usize, mode: MemMode) -> Result<Self> {
        if n == 0 {
            return Err(SpmvError::OutOfRange {
                name: "n",
                value: 0.0,
                range: ">= 1",
            });
        }
        let idx = match mode {
            MemMode::Direct => Vec::new(),
            MemMode::Indirect => {
                index::from_usize(n - 1)?;
                let mut idx = alloc_filled(n, 0 as Index)?;
                for (i, v) in idx.iter_mut().enumerate() {
                    *v = i as Index;
                }
                idx
            }
        };
        Ok(Self {
            mode,
            a: alloc_filled(n, 1.0)?,
            b: alloc_filled(n, 1.0)?,
            c: alloc_filled(n, 0.0)?,
            idx,
        })
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// One pass of the benchmark kernel.
    pub fn step(&mut self, w: &Workers) {
        let (a, b) = (&self.a, &self.b);
        match self.mode {
            MemMode::Direct => w.for_each_static(&mut self.c, |s, c| {
                let (a, b) = (&a[s..s + c.len()], &b[s..s + c.len()]);
                for ((ci, &ai), &bi) in c.iter_mut().zip(a).zip(b) {
                    *ci += ai * bi;
                }
            }),
            MemMode::Indirect => {
                let idx = &self.idx;
                w.for_each_static(&mut self.c, |s, c| {
                    let (a, idx) = (&a[s..s + c.len()], &idx[s..s + c.len()]);
                    for ((ci, &ai), &ii) in c.iter_mut().zip(a).zip(idx) {
                        *ci += ai * b[index::ux(ii)];
                    }
                })
            }
        }
    }

    /// Checks `C` against the value expected after `steps` passes.
    pub fn verify(&self, steps: usize) -> Result<()> {
        let expected = steps as f64;
        match self.c.iter().position(|&v| v != expected) {
            None => Ok(()),
            Some(i) => Err(SpmvError::Verification(format!(
                "C[{i}] = {} after {steps} passes, expected {expected}",
                self.c[i]
            ))),
        }
    }
}

/// Runs the memory benchmark on `n` elements; `bytes_per_s` counts
/// [`MemMode::bytes_per_element`] bytes per element.
pub fn membench(n: usize, mode: MemMode, cfg: &TimingConfig) -> Result<Measurement> {
    cfg.validate()?;
    let workers = Workers::new(cfg.workers);
    let mut arrays = MemArrays::new(n, mode)?;
    let mut steps = 0usize;
    let mut m = time_kernel(cfg, 2.0 * n as f64, || {
        arrays.step(&workers);
        steps += 1;
        Ok(())
    })?;
    arrays.verify(steps)?;
    m.bytes_per_s = Some((mode.bytes_per_element() * n) as f64 / m.best_time_s);
    Ok(m)
}
