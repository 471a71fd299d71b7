//! Data-parallel execution helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) [`indexed_map`] fans work out over
//! the rayon thread pool; without it the same call runs sequentially. Results
//! are returned in index order either way, and randomized workloads derive
//! one sub-seed per index with [`derive_seed`], so outputs are identical
//! regardless of the feature or thread schedule.
//!
//! [`indexed_map_seq`] is always sequential; the criterion bench suite uses it
//! as the baseline against the parallel path.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting results in index order.
pub fn indexed_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        indexed_map_seq(n, f)
    }
}

/// Sequential equivalent of [`indexed_map`], available regardless of features.
pub fn indexed_map_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Derive an independent sub-seed from a master seed and a stream index
/// (SplitMix64 finalizer). Identical inputs give identical outputs on every
/// platform.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let par = indexed_map(100, |i| derive_seed(7, i as u64));
        let seq = indexed_map_seq(100, |i| derive_seed(7, i as u64));
        assert_eq!(par, seq);
    }

    #[test]
    fn derived_seeds_differ_across_indices() {
        let a = derive_seed(42, 0);
        let b = derive_seed(42, 1);
        assert_ne!(a, b);
        assert_eq!(a, derive_seed(42, 0));
    }
}
