//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature the `*_par` entry points run on the rayon pool; without it they
//! are plain iterator maps. The `*_seq` variants are always sequential so both paths can be
//! benchmarked from one build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn map_par<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

pub fn map_seq<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Maps over an index range.
pub fn map_range_par<R, F>(range: std::ops::Range<u64>, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        range.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        range.map(f).collect()
    }
}

pub fn map_range_seq<R, F>(range: std::ops::Range<u64>, f: F) -> Vec<R>
where
    F: Fn(u64) -> R,
{
    range.map(f).collect()
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// How a computation should schedule independent work items.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Schedule {
    #[default]
    Auto,
    Sequential,
}

impl Schedule {
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Schedule::Auto => map_par(items, f),
            Schedule::Sequential => map_seq(items, f),
        }
    }

    pub fn map_range<R, F>(self, range: std::ops::Range<u64>, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(u64) -> R + Sync + Send,
    {
        match self {
            Schedule::Auto => map_range_par(range, f),
            Schedule::Sequential => map_range_seq(range, f),
        }
    }
}
