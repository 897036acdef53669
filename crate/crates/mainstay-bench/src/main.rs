use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use mainstay::{init_host, Error, FnSource, HostContext};
use mainstay_bench::{run, write_csv, BenchConfig, BenchError, Workload};

/// Times mainstay workloads and prints one CSV row per configuration.
///
/// The `scheduler` column names the library layer a row exercised:
/// `sequential` uses no library concurrency machinery (plain loops,
/// `std::thread` baselines, the host-side check loop), `raw_threads`
/// means unpooled guest threads, `pool` the thread pool, and
/// `parallel_for` the batched loop functions. Timing columns are totals
/// for the run described by `n`; divide by `n` for per-item costs.
/// `MAINSTAY_WORKERS` overrides the default worker count.
#[derive(Parser)]
#[command(name = "bench", version)]
struct Cli {
    /// Workload to measure.
    #[arg(value_enum)]
    workload: Workload,

    /// Job counts, thread counts, call counts, or sample sizes.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    sizes: Option<Vec<u64>>,

    /// Variable counts for the kde and kendall workloads.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    dims: Option<Vec<u64>>,

    /// Worker counts to sweep for pool-backed schedulers.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    workers: Option<Vec<usize>>,

    /// Batch count for parallel_for rows; 0 picks the heuristic.
    #[arg(long)]
    batches: Option<usize>,

    /// Measured repetitions per row (a warm-up pass is discarded).
    #[arg(long)]
    reps: Option<u64>,

    /// Seed for dataset generation, recorded in every row.
    #[arg(long)]
    seed: Option<u64>,

    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Cli {
    fn into_config(self) -> (BenchConfig, Option<PathBuf>) {
        let mut config = BenchConfig::defaults(self.workload);
        if let Some(sizes) = self.sizes {
            config.sizes = sizes;
        }
        if let Some(dims) = self.dims {
            config.dims = dims;
        }
        if let Some(workers) = self.workers {
            config.workers = workers;
        }
        if let Some(batches) = self.batches {
            config.batches = batches;
        }
        if let Some(reps) = self.reps {
            config.reps = reps;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        (config, self.out)
    }
}

/// The CLI process owns the host slot; Ctrl-C becomes a cooperative
/// interruption where the platform supports it.
fn install_host() -> Arc<HostContext> {
    #[cfg(unix)]
    if let Ok(source) = mainstay::SignalSource::install() {
        return init_host(source).expect("host slot is free at startup");
    }
    init_host(FnSource(|| false)).expect("host slot is free at startup")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (config, out) = cli.into_config();
    if let Err(message) = config.validate() {
        eprintln!("invalid configuration: {message}");
        return ExitCode::from(2);
    }

    let ctx = install_host();
    let records = match run(&ctx, &config) {
        Ok(records) => records,
        Err(BenchError::OutputMismatch(what)) => {
            eprintln!("output mismatch, no rows emitted: {what}");
            return ExitCode::from(3);
        }
        Err(BenchError::Lib(Error::Interrupted)) => {
            eprintln!("benchmark interrupted");
            return ExitCode::from(130);
        }
        Err(other) => {
            eprintln!("benchmark failed: {other}");
            return ExitCode::FAILURE;
        }
    };

    let written = match out {
        Some(path) => File::create(&path)
            .map(BufWriter::new)
            .and_then(|mut file| {
                write_csv(&mut file, &records)?;
                file.flush()
            }),
        None => {
            let stdout = io::stdout();
            write_csv(&mut stdout.lock(), &records)
        }
    };
    if let Err(error) = written {
        eprintln!("could not write results: {error}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
