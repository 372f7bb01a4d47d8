//! Execution strategy for the data-parallel loops (batch graph building,
//! database ranking, batch embedding).
//!
//! With the `parallel` feature (on by default) [`ExecMode::Parallel`] runs on
//! the rayon global pool. Without it, every mode runs sequentially. Results are
//! always returned in input order, so both modes produce identical output.

/// How a batch operation iterates over its items.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

impl ExecMode {
    /// True when this mode actually fans out to worker threads in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecMode::Parallel
    }
}

/// Order-preserving map over a slice.
pub fn map_slice<T, U, F>(mode: ExecMode, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode == ExecMode::Parallel {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}

/// Order-preserving fallible map; returns the error of the lowest failing index.
pub fn try_map_slice<T, U, E, F>(mode: ExecMode, items: &[T], f: F) -> Result<Vec<U>, E>
where
    T: Sync,
    U: Send,
    E: Send,
    F: Fn(&T) -> Result<U, E> + Sync + Send,
{
    map_slice(mode, items, f).into_iter().collect()
}
