//! Output schema of the harness: one CSV row per measured configuration.

use std::io::{self, Write};

/// Header emitted before any rows. Fixed so external plotting tools can
/// rely on the column order.
pub const CSV_HEADER: &str =
    "workload,scheduler,n,d,workers,batches,reps,nanos_median,nanos_min,seed";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Workload {
    /// No-op jobs pushed through each scheduler.
    EmptyJobs,
    /// Spawn+join round trips for plain and guest threads.
    ThreadSpawn,
    /// Tight-loop interruption checks from the host and from a child.
    InterruptCheck,
    /// One Gaussian kernel density estimate per variable.
    Kde,
    /// Kendall correlation matrix.
    Kendall,
}

impl Workload {
    pub fn name(self) -> &'static str {
        match self {
            Workload::EmptyJobs => "empty_jobs",
            Workload::ThreadSpawn => "thread_spawn",
            Workload::InterruptCheck => "interrupt_check",
            Workload::Kde => "kde",
            Workload::Kendall => "kendall",
        }
    }
}

/// Which layer of the library a row exercised.
///
/// `sequential` means no concurrency machinery from this library: the
/// plain loop, the `std::thread` baseline, and the host-side check loop
/// all fall under it. `raw_threads` means unpooled guest threads (guest
/// spawn rows and the child-side check loop, which runs in one guest).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheduler {
    Sequential,
    RawThreads,
    Pool,
    ParallelFor,
}

impl Scheduler {
    pub fn name(self) -> &'static str {
        match self {
            Scheduler::Sequential => "sequential",
            Scheduler::RawThreads => "raw_threads",
            Scheduler::Pool => "pool",
            Scheduler::ParallelFor => "parallel_for",
        }
    }
}

/// One measured configuration. Timing values are totals for the whole
/// run described by `n` (and `d` where it applies); per-item costs are
/// `nanos_median / n`, which keeps the integer columns exact even when
/// a single item costs less than a nanosecond.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchRecord {
    pub workload: Workload,
    pub scheduler: Scheduler,
    /// Jobs, threads, calls, or sample size depending on the workload.
    pub n: u64,
    /// Number of variables; 0 where the workload has none.
    pub d: u64,
    /// Pool workers used by the scheduler; 0 when it uses none.
    pub workers: u64,
    /// Requested batch count; 0 means the automatic heuristic.
    pub batches: u64,
    pub reps: u64,
    pub nanos_median: u64,
    pub nanos_min: u64,
    pub seed: u64,
}

impl BenchRecord {
    pub fn csv_line(&self) -> String {
        debug_assert!(self.nanos_min <= self.nanos_median);
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.workload.name(),
            self.scheduler.name(),
            self.n,
            self.d,
            self.workers,
            self.batches,
            self.reps,
            self.nanos_median,
            self.nanos_min,
            self.seed
        )
    }
}

/// Writes the header and one line per record.
pub fn write_csv<W: Write>(out: &mut W, records: &[BenchRecord]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for record in records {
        writeln!(out, "{}", record.csv_line())?;
    }
    Ok(())
}
