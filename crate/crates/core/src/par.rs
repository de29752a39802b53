//! Data-parallel helpers.
//!
//! With the `parallel` feature (on by default) [`Execution::Parallel`] runs on
//! the rayon global pool. Without it every call runs sequentially. Output
//! order always matches input order, so results are identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run work in parallel.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect(),
        _ => items.iter().enumerate().map(|(i, x)| f(i, x)).collect(),
    }
}

/// Fallible variant of [`map`]. Returns the error with the lowest index.
pub fn try_map<T, R, E, F>(exec: Execution, items: &[T], f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(usize, &T) -> Result<R, E> + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            // rayon's collect into Result reports an arbitrary failing item,
            // so collect everything and pick the first error in input order.
            let all: Vec<Result<R, E>> = items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect();
            all.into_iter().collect()
        }
        _ => items.iter().enumerate().map(|(i, x)| f(i, x)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_matches_sequential() {
        let xs: Vec<u64> = (0..10_000).collect();
        let a = map(Execution::Sequential, &xs, |i, x| x * x + i as u64);
        let b = map(Execution::Parallel, &xs, |i, x| x * x + i as u64);
        assert_eq!(a, b);
    }

    #[test]
    fn try_map_reports_lowest_failing_index() {
        let xs: Vec<usize> = (0..1000).collect();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let r: Result<Vec<usize>, usize> = try_map(exec, &xs, |i, _| if i % 300 == 299 { Err(i) } else { Ok(i) });
            assert_eq!(r, Err(299));
        }
    }
}
