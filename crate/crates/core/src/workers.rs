use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

/// Worker threads available to a kernel.
///
/// One worker runs everything on the calling thread. More workers use a
/// dedicated rayon pool; each output element is written by exactly one task,
/// so results do not depend on the worker count.
pub struct Workers {
    count: usize,
    pool: Option<ThreadPool>,
}

impl Workers {
    pub fn sequential() -> Self {
        Self {
            count: 1,
            pool: None,
        }
    }

    /// `count` is clamped to at least 1.
    pub fn new(count: usize) -> Self {
        let count = count.max(1);
        if count == 1 {
            return Self::sequential();
        }
        let pool = ThreadPoolBuilder::new()
            .num_threads(count)
            .thread_name(|i| format!("spmv-worker-{i}"))
            .build()
            .expect("failed to spawn worker threads");
        Self {
            count,
            pool: Some(pool),
        }
    }

    /// One worker per available hardware thread.
    pub fn max() -> Self {
        Self::new(Self::available())
    }

    pub fn available() -> usize {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Splits `out` into `count` contiguous chunks of nearly equal size and
    /// calls `f(first_index, chunk)` for each, in parallel when possible.
    pub(crate) fn for_each_static<F>(&self, out: &mut [f64], f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync,
    {
        let chunk = out.len().div_ceil(self.count).max(1);
        self.for_each_chunk(out, chunk, f);
    }

    /// Calls `f(first_index, chunk)` for consecutive `chunk`-sized pieces of
    /// `out`. Piece `p` always starts at `p * chunk`.
    pub(crate) fn for_each_chunk<F>(&self, out: &mut [f64], chunk: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync,
    {
        debug_assert!(chunk > 0);
        match &self.pool {
            None => out
                .chunks_mut(chunk)
                .enumerate()
                .for_each(|(p, c)| f(p * chunk, c)),
            Some(pool) => pool.install(|| {
                out.par_chunks_mut(chunk)
                    .enumerate()
                    .for_each(|(p, c)| f(p * chunk, c))
            }),
        }
    }
}

impl Default for Workers {
    fn default() -> Self {
        Self::sequential()
    }
}

impl std::fmt::Debug for Workers {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Workers")
            .field("count", &self.count)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_cover_output_once() {
        for w in [1, 2, 3] {
            let workers = Workers::new(w);
            let mut out = vec![0.0; 10];
            workers.for_each_chunk(&mut out, 3, |start, c| {
                for (k, v) in c.iter_mut().enumerate() {
                    *v += (start + k) as f64;
                }
            });
            assert_eq!(out, (0..10).map(|v| v as f64).collect::<Vec<_>>());
        }
    }

    #[test]
    fn zero_is_clamped() {
        assert_eq!(Workers::new(0).count(), 1);
    }
}
