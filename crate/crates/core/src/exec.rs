//! Execution strategy for grid-shaped and batch workloads.
//!
//! Every kernel in the crate funnels through these helpers, so switching
//! between rayon and plain iterators happens in one place. Results are always
//! collected in index order, which keeps output bit-identical across modes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

impl Execution {
    /// Evaluate `f(row, col)` over an `ny × nx` lattice, row-major.
    pub fn fill<T, F>(self, ny: usize, nx: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, usize) -> T + Sync + Send,
    {
        let n = ny * nx;
        match self {
            Execution::Sequential => (0..n).map(|k| f(k / nx, k % nx)).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(|k| f(k / nx, k % nx)).collect(),
        }
    }

    /// Map over a slice, preserving input order.
    pub fn map<I, T, F>(self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().map(f).collect(),
        }
    }
}
