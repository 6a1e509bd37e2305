//! Execution policy for the data-parallel loops in the crate.
//!
//! Every parallel loop is written as an ordered map: work items are computed
//! independently and the results come back in input order, so reductions are
//! performed sequentially afterwards. Results are therefore bit-identical
//! between [`Exec::Sequential`] and [`Exec::Parallel`], and independent of the
//! thread count. When the `parallel` feature is disabled, `Parallel` quietly
//! runs sequentially.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// `(0..n).map(f)` in input order.
    pub fn map_range<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Applies `f` to consecutive chunks of `items` (the last one may be
    /// short), returning one result per chunk in order.
    pub fn map_chunks<I, T, F>(self, items: &[I], chunk_len: usize, f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&[I]) -> T + Sync + Send,
    {
        let chunk_len = chunk_len.max(1);
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_chunks(chunk_len).map(f).collect();
        }
        items.chunks(chunk_len).map(f).collect()
    }
}

/// Independent random stream `stream` derived from a master seed.
///
/// Used wherever a batch of work items each need their own generator, so the
/// draws do not depend on scheduling.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn sequential_and_parallel_agree() {
        let f = |i: usize| {
            let mut rng = stream_rng(7, i as u64);
            rng.random::<f64>()
        };
        assert_eq!(
            Exec::Sequential.map_range(100, f),
            Exec::Parallel.map_range(100, f)
        );
        let xs: Vec<f64> = (0..1000).map(|i| i as f64 * 0.1).collect();
        let sum = |c: &[f64]| c.iter().sum::<f64>();
        assert_eq!(
            Exec::Sequential.map_chunks(&xs, 64, sum),
            Exec::Parallel.map_chunks(&xs, 64, sum)
        );
    }

    #[test]
    fn streams_differ() {
        let a: u64 = stream_rng(1, 0).random();
        let b: u64 = stream_rng(1, 1).random();
        assert_ne!(a, b);
    }
}
