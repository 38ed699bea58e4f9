//! Data-parallel map with a sequential fallback.
//!
//! Episode evaluation and ablation grids fan out over immutable data; the
//! `parallel` feature backs [`par_map`] with rayon, otherwise it degrades to
//! a plain sequential map. Output order always matches input order, so
//! results are identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Sequential map with the same signature as [`par_map`]; the benchmark
/// suite compares the two on identical workloads.
pub fn seq_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_preserves_order() {
        let xs: Vec<u32> = (0..100).collect();
        let doubled = par_map(&xs, |x| x * 2);
        let expected = seq_map(&xs, |x| x * 2);
        assert_eq!(doubled, expected);
    }
}
