//! Timing harness for the `mainstay` concurrency primitives.
//!
//! Five workloads (no-op jobs, thread spawning, interruption checks,
//! kernel density estimation, Kendall correlation) are each run under
//! the schedulers that apply to them, and every measurement becomes one
//! CSV row. Datasets come from `ChaCha12Rng` streams derived from the
//! run seed, so identical configurations produce identical inputs and
//! identical non-timing columns.
//!
//! Correctness gates timing: a parallel kernel run is compared against
//! the sequential result first, and a mismatch aborts the benchmark
//! without emitting rows.

pub mod config;
pub mod record;
pub mod workloads;

pub use config::{default_workers, BenchConfig, WORKERS_ENV};
pub use record::{write_csv, BenchRecord, Scheduler, Workload, CSV_HEADER};
pub use workloads::{measure, run, BenchError};

/// Physical core count from `/proc/cpuinfo` (unique physical id/core id
/// pairs), falling back to the logical count where the fields are
/// missing. Used to decide whether speedup comparisons mean anything.
pub fn physical_cores() -> usize {
    let Ok(info) = std::fs::read_to_string("/proc/cpuinfo") else {
        return mainstay::hardware_cores();
    };
    let mut pairs = std::collections::HashSet::new();
    let (mut phys, mut core) = (None::<u64>, None::<u64>);
    for line in info.lines() {
        let mut parts = line.splitn(2, ':');
        let key = parts.next().unwrap_or("").trim();
        let value = parts.next().unwrap_or("").trim();
        match key {
            "physical id" => phys = value.parse().ok(),
            "core id" => core = value.parse().ok(),
            "" => {
                if let (Some(p), Some(c)) = (phys, core) {
                    pairs.insert((p, c));
                }
                phys = None;
                core = None;
            }
            _ => {}
        }
    }
    if let (Some(p), Some(c)) = (phys, core) {
        pairs.insert((p, c));
    }
    if pairs.is_empty() {
        mainstay::hardware_cores()
    } else {
        pairs.len()
    }
}
