//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (default) work is spread over a rayon pool;
//! without it every [`Execution`] runs on the calling thread. Both paths
//! return results in input order, so output never depends on thread count.

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// `threads == 0` uses rayon's global pool.
    Parallel { threads: usize },
    #[default]
    Auto,
}

impl Execution {
    pub fn from_threads(threads: usize) -> Self {
        match threads {
            0 => Execution::Auto,
            1 => Execution::Sequential,
            n => Execution::Parallel { threads: n },
        }
    }

    pub fn is_parallel(&self) -> bool {
        cfg!(feature = "parallel") && !matches!(self, Execution::Sequential)
    }

    /// Order-preserving map.
    pub fn map<T, U, F>(&self, items: &[T], f: F) -> Result<Vec<U>>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return self.install(|| items.par_iter().map(&f).collect());
        }
        Ok(items.iter().map(f).collect())
    }

    /// Folds chunks independently and merges the partial results. `merge`
    /// must be associative and commutative with `identity` as its unit.
    pub fn fold_merge<T, A, Id, Fo, Me>(&self, items: &[T], identity: Id, fold: Fo, merge: Me) -> Result<A>
    where
        T: Sync,
        A: Send,
        Id: Fn() -> A + Sync + Send,
        Fo: Fn(A, &T) -> A + Sync + Send,
        Me: Fn(A, A) -> A + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return self.install(|| items.par_iter().fold(&identity, &fold).reduce(&identity, &merge));
        }
        let _ = &merge;
        Ok(items.iter().fold(identity(), fold))
    }

    #[cfg(feature = "parallel")]
    fn install<R: Send>(&self, op: impl FnOnce() -> R + Send) -> Result<R> {
        match self {
            Execution::Parallel { threads } if *threads > 0 => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(*threads)
                    .build()
                    .map_err(|e| crate::error::Error::Internal(format!("thread pool: {e}")))?;
                Ok(pool.install(op))
            }
            _ => Ok(op()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order_for_any_execution() {
        let items: Vec<u64> = (0..10_000).collect();
        let expected: Vec<u64> = items.iter().map(|x| x * x).collect();
        for exec in [Execution::Sequential, Execution::Auto, Execution::Parallel { threads: 3 }] {
            assert_eq!(exec.map(&items, |x| x * x).unwrap(), expected);
        }
    }

    #[test]
    fn fold_merge_matches_sequential_sum() {
        let items: Vec<u64> = (1..=5000).collect();
        for exec in [Execution::Sequential, Execution::Parallel { threads: 4 }] {
            let sum = exec.fold_merge(&items, || 0u64, |a, x| a + x, |a, b| a + b).unwrap();
            assert_eq!(sum, 5000 * 5001 / 2);
        }
    }

    #[test]
    fn thread_counts() {
        assert_eq!(Execution::from_threads(1), Execution::Sequential);
        assert_eq!(Execution::from_threads(8), Execution::Parallel { threads: 8 });
        assert!(!Execution::Sequential.is_parallel());
    }
}
