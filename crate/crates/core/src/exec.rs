//! Data-parallel map over index ranges, with a sequential fallback.
//!
//! Results are always returned in index order, so any reduction performed by
//! the caller over the returned vector is independent of scheduling.

/// How index-parallel work is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon work-stealing when the `parallel` feature is enabled; identical
    /// to `Sequential` otherwise.
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run work in parallel.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    /// Evaluate `f(0), …, f(len - 1)` and return the results in index order.
    pub fn map_indexed<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..len).map(f).collect(),
            Execution::Parallel => par_map(len, f),
        }
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..len).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..len).map(f).collect()
}

/// Run `op` on a dedicated pool of `threads` workers (or the global pool when
/// `threads` is `None`). Without the `parallel` feature this just calls `op`.
#[cfg(feature = "parallel")]
pub fn with_threads<R: Send>(threads: Option<usize>, op: impl FnOnce() -> R + Send) -> R {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("failed to build thread pool")
            .install(op),
        None => op(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<R: Send>(_threads: Option<usize>, op: impl FnOnce() -> R + Send) -> R {
    op()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let a = Execution::Sequential.map_indexed(1000, f);
        let b = with_threads(Some(4), || Execution::Parallel.map_indexed(1000, f));
        assert_eq!(a, b);
    }
}
