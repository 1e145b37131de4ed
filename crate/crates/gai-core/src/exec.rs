//! Replication sweeps over seeds.
//!
//! Episodes are embarrassingly parallel, so sweeps fan out with rayon when
//! the `parallel` feature is on (the default) and fall back to a plain loop
//! otherwise. Results always come back in seed order, so parallel and
//! sequential execution are observably identical.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Map `f` over the seeds, in parallel when the `parallel` feature is on.
/// Output order matches input order regardless of scheduling.
pub fn map_seeds<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    {
        seeds.par_iter().map(|&s| f(s)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        seeds.iter().map(|&s| f(s)).collect()
    }
}

/// Always-sequential twin of [`map_seeds`], for comparison benchmarks and for
/// callers that must stay off the thread pool.
pub fn map_seeds_serial<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    seeds.iter().map(|&s| f(s)).collect()
}

/// [`map_seeds`] on a dedicated pool capped at `jobs` threads; `jobs = 0`
/// means the default parallelism. Without the `parallel` feature this runs
/// sequentially whatever `jobs` says.
pub fn map_seeds_with_jobs<T, F>(seeds: &[u64], jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    {
        if jobs == 0 {
            return Ok(map_seeds(seeds, f));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot build a {jobs}-thread pool: {e}")))?;
        Ok(pool.install(|| seeds.par_iter().map(|&s| f(s)).collect()))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        Ok(map_seeds_serial(seeds, f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{run_gai_episode, Algorithm, AlgorithmSpec};
    use crate::model::{BanditInstance, RewardLaw};

    #[test]
    fn parallel_and_serial_agree_in_order() {
        let inst =
            BanditInstance::synthetic_uniform(5, 0.2, 0.8, 0.5, RewardLaw::Bernoulli, 1).unwrap();
        let spec = AlgorithmSpec::new(Algorithm::Hdoc, 0.1);
        let seeds: Vec<u64> = (0..16).collect();
        let run = |s: u64| {
            let t = run_gai_episode(&spec, &inst, 2_000, s).unwrap();
            (t.pulls.len(), t.ledger.stop_round())
        };
        let parallel = map_seeds(&seeds, run);
        let serial = map_seeds_serial(&seeds, run);
        assert_eq!(parallel, serial);
    }

    #[test]
    fn job_capped_pool_matches_default() {
        let seeds: Vec<u64> = (0..8).collect();
        let square = |s: u64| s * s;
        let capped = map_seeds_with_jobs(&seeds, 2, square).unwrap();
        assert_eq!(capped, map_seeds(&seeds, square));
        let auto = map_seeds_with_jobs(&seeds, 0, square).unwrap();
        assert_eq!(auto, capped);
    }
}
