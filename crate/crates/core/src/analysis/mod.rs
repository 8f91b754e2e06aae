//! Exact oracles and replica-parallel Monte Carlo estimators.
//!
//! Replicas are indexed `0..N`; replica `r` draws only from the streams of
//! `(seed, r)`. Workers may run replicas in any order, results are collected
//! by index and reduced sequentially, so every estimate is a deterministic
//! function of the seed, `N` and the cap.

pub mod compare;
pub mod green;
pub mod moment;
pub mod passage;
pub mod stats;
pub mod tail;
pub mod verify;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Replica fan-out parameters shared by the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RunSettings {
    pub seed: u64,
    pub replicas: u64,
    pub cap: u64,
    /// Worker threads; `None` uses the global pool.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl RunSettings {
    pub fn new(seed: u64, replicas: u64, cap: u64) -> Self {
        RunSettings {
            seed,
            replicas,
            cap,
            threads: None,
        }
    }

    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    pub fn meta(&self) -> ReportMeta {
        ReportMeta {
            seed: self.seed,
            replicas: self.replicas,
            cap: self.cap,
            version: VERSION.to_string(),
        }
    }
}

/// Provenance embedded in every report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportMeta {
    pub seed: u64,
    pub replicas: u64,
    pub cap: u64,
    pub version: String,
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Bootstrap resampling defaults.
pub const BOOTSTRAP_BLOCKS: usize = 500;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Runs `job` for every replica index and returns the results in index order.
pub fn run_replicas<T, F>(replicas: u64, threads: Option<usize>, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let work = || {
        (0..replicas)
            .into_par_iter()
            .map(&job)
            .collect::<Result<Vec<T>>>()
    };
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

/// Fails with `ExcessCensoring` when more than half of the replicas are censored.
pub fn check_censoring(censored: u64, total: u64) -> Result<()> {
    if total > 0 && 2 * censored > total {
        Err(Error::ExcessCensoring { censored, total })
    } else {
        Ok(())
    }
}
