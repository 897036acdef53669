//! Run configuration: grids, repetitions, and defaults per workload.

use crate::record::Workload;

/// Environment variable overriding the default worker count.
pub const WORKERS_ENV: &str = "MAINSTAY_WORKERS";

/// Default pool size: `MAINSTAY_WORKERS` when set to a positive integer,
/// otherwise the number of logical cores.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|raw| raw.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(mainstay::hardware_cores)
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub workload: Workload,
    /// Job counts, thread counts, call counts, or sample sizes.
    pub sizes: Vec<u64>,
    /// Variable counts for the kernel workloads; unused elsewhere.
    pub dims: Vec<u64>,
    /// Worker counts to sweep for pool-backed schedulers.
    pub workers: Vec<usize>,
    /// Requested batch count for parallel-for rows; 0 = automatic.
    pub batches: usize,
    pub reps: u64,
    pub seed: u64,
}

impl BenchConfig {
    /// A runnable configuration with desk-scale grids.
    pub fn defaults(workload: Workload) -> Self {
        let (sizes, dims) = match workload {
            Workload::EmptyJobs => (vec![10, 100, 1_000, 10_000], Vec::new()),
            Workload::ThreadSpawn => (vec![1, 2, 4, 8], Vec::new()),
            Workload::InterruptCheck => (vec![1_000_000], Vec::new()),
            Workload::Kde => (vec![1_000, 5_000], vec![10, 50]),
            Workload::Kendall => (vec![200, 1_000], vec![5, 20]),
        };
        BenchConfig {
            workload,
            sizes,
            dims,
            workers: vec![default_workers()],
            batches: 0,
            reps: 5,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.sizes.is_empty() {
            return Err("size grid is empty".into());
        }
        if self.sizes.contains(&0) {
            return Err("sizes must be positive".into());
        }
        if self.reps < 3 {
            return Err(format!("reps must be at least 3, got {}", self.reps));
        }
        let uses_pool = matches!(
            self.workload,
            Workload::EmptyJobs | Workload::Kde | Workload::Kendall
        );
        if uses_pool && self.workers.is_empty() {
            return Err("worker grid is empty".into());
        }
        if matches!(self.workload, Workload::Kde | Workload::Kendall) {
            if self.dims.is_empty() {
                return Err("dimension grid is empty".into());
            }
            if self.dims.contains(&0) {
                return Err("dims must be positive".into());
            }
            // Bandwidth selection and rank correlation are undefined on a
            // single observation.
            if self.sizes.iter().any(|&n| n < 2) {
                return Err("kernel workloads need sample sizes of at least 2".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_for_every_workload() {
        for workload in [
            Workload::EmptyJobs,
            Workload::ThreadSpawn,
            Workload::InterruptCheck,
            Workload::Kde,
            Workload::Kendall,
        ] {
            BenchConfig::defaults(workload).validate().unwrap();
        }
    }

    #[test]
    fn bad_grids_are_rejected() {
        let mut config = BenchConfig::defaults(Workload::EmptyJobs);
        config.sizes.clear();
        assert!(config.validate().is_err());

        let mut config = BenchConfig::defaults(Workload::EmptyJobs);
        config.sizes.push(0);
        assert!(config.validate().is_err());

        let mut config = BenchConfig::defaults(Workload::Kde);
        config.reps = 2;
        assert!(config.validate().is_err());

        let mut config = BenchConfig::defaults(Workload::Kde);
        config.dims.clear();
        assert!(config.validate().is_err());

        let mut config = BenchConfig::defaults(Workload::Kendall);
        config.sizes = vec![1];
        assert!(config.validate().is_err());

        let mut config = BenchConfig::defaults(Workload::Kendall);
        config.workers.clear();
        assert!(config.validate().is_err());
    }
}
