//! Trial execution and seed derivation.
//!
//! Every random quantity in the crate is drawn from a [`ChaCha8Rng`] whose seed
//! is derived from a root seed, a stream label and a trial index. Results are
//! therefore identical whether trials run on the rayon pool or sequentially.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of substream `label`, trial `index`, from `root`.
pub fn derive_seed(root: u64, label: &str, index: u64) -> u64 {
    // FNV-1a over the label, then mixed with root and index.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix(splitmix(root ^ h).wrapping_add(index.wrapping_mul(GOLDEN)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn substream(root: u64, label: &str, index: u64) -> ChaCha8Rng {
    rng_from_seed(derive_seed(root, label, index))
}

/// How independent trials are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Rayon work-stealing pool. Falls back to sequential execution when the
    /// `parallel` feature is disabled.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Evaluates `f(i)` for `i in 0..count`, preserving index order.
    pub fn map<T, F>(self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..count).map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..count).into_par_iter().map(f).collect(),
            #[cfg(not(feature = "parallel"))]
            Exec::Parallel => (0..count).map(f).collect(),
        }
    }

    /// Maps `f` over `0..count` and folds the results with the associative
    /// `combine`, starting from `identity()` in every chunk.
    pub fn map_reduce<T, F, I, C>(self, count: u64, f: F, identity: I, combine: C) -> T
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
        I: Fn() -> T + Sync + Send,
        C: Fn(T, T) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..count).map(f).fold(identity(), combine),
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..count).into_par_iter().map(f).reduce(identity, combine),
            #[cfg(not(feature = "parallel"))]
            Exec::Parallel => (0..count).map(f).fold(identity(), combine),
        }
    }
}
