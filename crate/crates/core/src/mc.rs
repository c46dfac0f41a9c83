//! Seeded replication harness.
//!
//! Replication `i` always draws from ChaCha8 stream `i` of the root seed, so
//! results depend only on `(seed, i)` and never on how work is scheduled.
//! Results come back in replication order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "CONSENSUS_LAB_THREADS";

/// RNG for replication `index` under `seed`.
pub fn replication_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Worker count: explicit request, else `CONSENSUS_LAB_THREADS`, else rayon's default.
pub fn resolve_workers(requested: Option<usize>) -> usize {
    requested
        .or_else(|| {
            std::env::var(THREADS_ENV)
                .ok()
                .and_then(|v| v.trim().parse().ok())
        })
        .filter(|&w| w > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

/// Runs `f(i, rng_i)` for `i in 0..replications` and returns results in index order.
pub fn replicate<T, F>(replications: usize, seed: u64, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync,
{
    let workers = resolve_workers(workers);
    let run = |i: usize| {
        let mut rng = replication_rng(seed, i);
        f(i, &mut rng)
    };
    if workers == 1 {
        return Ok((0..replications).map(run).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..replications).into_par_iter().map(run).collect()))
}

/// Sample mean and unbiased variance, accumulated in slice order.
pub fn mean_var(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1) as f64)
}

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let (mean, var) = mean_var(samples);
        Estimate {
            mean,
            stderr: (var / samples.len() as f64).sqrt(),
        }
    }

    /// `|mean - target| <= k * stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}
