//! Execution strategy, reproducible random streams and compensated sums.
//!
//! Monte Carlo work is cut into fixed-size blocks. Block `i` always draws from
//! stream `i` of the seeded generator and partial results are merged in block
//! order, so a run is bit-identical whatever the worker count or executor.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Auctions (or samples) handled by one block.
pub const DEFAULT_BLOCK_LEN: u64 = 1 << 15;

/// Generator used for every random draw in the crate.
pub type Rng = ChaCha8Rng;

/// Independent generator for `(seed, stream)`.
pub fn rng_stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// How block work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon work stealing; `workers: None` uses the global pool. Without the
    /// `parallel` feature this runs sequentially.
    Parallel {
        workers: Option<usize>,
    },
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel { workers: None }
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    pub fn with_workers(workers: Option<usize>) -> Self {
        match workers {
            Some(1) => Execution::Sequential,
            w => Execution::Parallel { workers: w },
        }
    }

    /// Evaluates `f(0..blocks)` and returns the results in block order.
    pub fn map_blocks<T, F>(&self, blocks: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match *self {
            Execution::Sequential => (0..blocks).map(f).collect(),
            Execution::Parallel { workers } => par_map(blocks, workers, f),
        }
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, F>(blocks: usize, workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let run = || (0..blocks).into_par_iter().map(&f).collect::<Vec<_>>();
    match workers {
        None => run(),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(_) => (0..blocks).map(&f).collect(),
        },
    }
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, F>(blocks: usize, _workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..blocks).map(f).collect()
}

/// `(block index, length)` pairs covering `total` items.
pub fn block_plan(total: u64, block_len: u64) -> Vec<(u64, u64)> {
    let block_len = block_len.max(1);
    let full = total / block_len;
    let rest = total % block_len;
    let mut plan: Vec<(u64, u64)> = (0..full).map(|i| (i, block_len)).collect();
    if rest > 0 {
        plan.push((full, rest));
    }
    plan
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Running first and second moments of one observable.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub sum: CompensatedSum,
    pub sum_sq: CompensatedSum,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    pub fn merge(&mut self, other: &Moments) {
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
    }

    pub fn mean(&self, count: u64) -> f64 {
        if count == 0 {
            return 0.0;
        }
        self.sum.value() / count as f64
    }

    /// Standard error of the mean over `count` observations.
    pub fn std_error(&self, count: u64) -> f64 {
        if count < 2 {
            return 0.0;
        }
        let n = count as f64;
        let mean = self.sum.value() / n;
        let var = ((self.sum_sq.value() / n - mean * mean) * n / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// Delta-method standard error of `mean(a) / mean(b)` from per-sample sums.
pub fn ratio_std_error(count: u64, sum_a: f64, sum_b: f64, sum_aa: f64, sum_bb: f64, sum_ab: f64) -> f64 {
    if count < 2 || sum_b == 0.0 {
        return 0.0;
    }
    let n = count as f64;
    let ma = sum_a / n;
    let mb = sum_b / n;
    let ratio = ma / mb;
    let var_a = sum_aa / n - ma * ma;
    let var_b = sum_bb / n - mb * mb;
    let cov = sum_ab / n - ma * mb;
    let var = (var_a - 2.0 * ratio * cov + ratio * ratio * var_b).max(0.0) / (mb * mb);
    (var / (n - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let mut s = CompensatedSum::new();
        for x in [1.0, 1e100, 1.0, -1e100] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
        let naive: f64 = [1.0, 1e100, 1.0, -1e100].iter().sum();
        assert_eq!(naive, 0.0);
    }

    #[test]
    fn block_plan_covers_total() {
        let plan = block_plan(10, 4);
        assert_eq!(plan, vec![(0, 4), (1, 4), (2, 2)]);
        assert!(block_plan(0, 4).is_empty());
        assert_eq!(block_plan(8, 4).len(), 2);
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a: u64 = rng_stream(7, 0).random();
        let b: u64 = rng_stream(7, 1).random();
        let c: u64 = rng_stream(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn executors_agree_bitwise() {
        let work = |i: usize| {
            let mut rng = rng_stream(3, i as u64);
            (0..1000).map(|_| rng.random::<f64>()).collect::<CompensatedSum>()
        };
        let seq: Vec<f64> = Execution::Sequential
            .map_blocks(37, work)
            .iter()
            .map(|s| s.value())
            .collect();
        for workers in [None, Some(2), Some(5)] {
            let par: Vec<f64> = Execution::Parallel { workers }
                .map_blocks(37, work)
                .iter()
                .map(|s| s.value())
                .collect();
            assert_eq!(seq, par);
        }
    }

    #[test]
    fn moments_match_direct_formula() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        let mut m = Moments::default();
        xs.iter().for_each(|&x| m.push(x));
        assert_eq!(m.mean(4), 3.5);
        let var = xs.iter().map(|x| (x - 3.5f64).powi(2)).sum::<f64>() / 3.0;
        assert!((m.std_error(4) - (var / 4.0).sqrt()).abs() < 1e-12);
    }
}
