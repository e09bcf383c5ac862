//! Execution strategy for the data-parallel loops.
//!
//! Every parallel path computes each element independently and reduces in a
//! fixed order, so results are bit-identical to the sequential path. Without
//! the `parallel` feature, [`Execution::Parallel`] silently runs sequentially.

/// How data-parallel loops are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// True when this build can actually run loops on the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Apply `f` to every index in `0..len`, collecting results in index order.
    pub(crate) fn map_collect<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }

    /// Apply `f` to every fixed-size chunk of `data` (chunk index, chunk).
    pub(crate) fn for_each_chunk_mut<T, F>(self, data: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            data.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
            return;
        }
        data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }

    /// Parallelism for per-step work is only worth it on large codebooks;
    /// below `threshold` scalar operations this degrades to sequential.
    pub(crate) fn for_work(self, work: usize, threshold: usize) -> Execution {
        if work >= threshold {
            self
        } else {
            Execution::Sequential
        }
    }
}
