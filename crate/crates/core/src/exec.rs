//! Execution policy for the data-parallel stages.
//!
//! Every parallel stage in the crate goes through [`Exec`], so a run with
//! `Exec::Sequential` and a run with `Exec::Parallel` take exactly the same
//! code path apart from how the per-item work is scheduled. Outputs are
//! always collected in input order, which keeps results identical for any
//! worker count.
//!
//! Without the `parallel` cargo feature, `Exec::Parallel` silently falls back
//! to sequential iteration.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Smallest run of indices handed to one worker by the range primitives.
/// Their per-index work is often a handful of operations.
#[cfg(feature = "parallel")]
const MIN_RANGE_CHUNK: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// `workers == 1` selects the sequential path; anything else uses the
    /// shared thread pool.
    pub fn from_workers(workers: usize) -> Self {
        if workers == 1 {
            Exec::Sequential
        } else {
            Exec::Parallel
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Order-preserving map over a slice.
    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Order-preserving map over an index range.
    pub fn map_range<U, F>(self, len: usize, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return (0..len).into_par_iter().with_min_len(MIN_RANGE_CHUNK).map(f).collect();
        }
        (0..len).map(f).collect()
    }

    /// Reduce `f(i)` over `0..len` with an associative, commutative `pick`.
    pub fn reduce_range<U, F, P>(self, len: usize, f: F, pick: P) -> Option<U>
    where
        U: Send,
        F: Fn(usize) -> Option<U> + Sync + Send,
        P: Fn(U, U) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return (0..len)
                .into_par_iter()
                .with_min_len(MIN_RANGE_CHUNK)
                .filter_map(f)
                .reduce_with(pick);
        }
        (0..len).filter_map(f).reduce(pick)
    }

    /// Apply `f` to every element in place.
    pub fn for_each_mut<T, F>(self, items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            items
                .par_iter_mut()
                .with_min_len(MIN_RANGE_CHUNK)
                .enumerate()
                .for_each(|(i, t)| f(i, t));
            return;
        }
        items.iter_mut().enumerate().for_each(|(i, t)| f(i, t));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_paths_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = Exec::Sequential.map(&xs, |x| x * x);
        let b = Exec::Parallel.map(&xs, |x| x * x);
        assert_eq!(a, b);
        let ra = Exec::Sequential.reduce_range(100, |i| Some(i % 17), usize::max);
        let rb = Exec::Parallel.reduce_range(100, |i| Some(i % 17), usize::max);
        assert_eq!(ra, rb);
    }

    #[test]
    fn workers_mapping() {
        assert_eq!(Exec::from_workers(1), Exec::Sequential);
        assert_eq!(Exec::from_workers(0), Exec::Parallel);
        assert_eq!(Exec::from_workers(8), Exec::Parallel);
    }
}
