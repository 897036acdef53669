//! The measured workloads. Every parallel kernel run is verified against
//! the sequential result before any timing row is recorded; a mismatch
//! aborts the benchmark instead of emitting numbers for wrong answers.

use std::hint::black_box;
use std::sync::{mpsc, Arc, OnceLock};
use std::thread;
use std::time::Instant;

use mainstay::kernels::{
    kde_gauss, kendall_matrix, kendall_matrix_seq, kendall_tau_knight, CorrelationMatrix,
    DensityEstimate,
};
use mainstay::{parallel_for_in, Error, GuestThread, HostContext, ThreadPool};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::BenchConfig;
use crate::record::{BenchRecord, Scheduler, Workload};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parallel output mismatched the sequential result: {0}")]
    OutputMismatch(String),
    #[error(transparent)]
    Lib(#[from] Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Times `run` with one discarded warm-up pass, then `reps` measured
/// passes. Returns `(median, min)` in nanoseconds; with an even rep
/// count the lower middle sample is the median.
pub fn measure<F: FnMut()>(reps: u64, mut run: F) -> (u64, u64) {
    assert!(reps >= 1, "need at least one repetition");
    run();
    let mut samples: Vec<u64> = (0..reps)
        .map(|_| {
            let start = Instant::now();
            run();
            start.elapsed().as_nanos() as u64
        })
        .collect();
    samples.sort_unstable();
    (samples[samples.len() / 2], samples[0])
}

/// Runs the workload selected by the configuration.
pub fn run(ctx: &Arc<HostContext>, config: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    config.validate().map_err(BenchError::InvalidConfig)?;
    match config.workload {
        Workload::EmptyJobs => bench_empty(ctx, config),
        Workload::ThreadSpawn => bench_thread_spawn(ctx, config),
        Workload::InterruptCheck => bench_interrupt(ctx, config),
        Workload::Kde => bench_kde(ctx, config),
        Workload::Kendall => bench_kendall(ctx, config),
    }
}

fn row(
    config: &BenchConfig,
    scheduler: Scheduler,
    n: u64,
    d: u64,
    workers: u64,
    batches: u64,
    (nanos_median, nanos_min): (u64, u64),
) -> BenchRecord {
    BenchRecord {
        workload: config.workload,
        scheduler,
        n,
        d,
        workers,
        batches,
        reps: config.reps,
        nanos_median,
        nanos_min,
        seed: config.seed,
    }
}

fn batches_opt(config: &BenchConfig) -> Option<usize> {
    if config.batches == 0 {
        None
    } else {
        Some(config.batches)
    }
}

/// No-op jobs: a counter loop as the sequential baseline, then the same
/// job count pushed through a live pool and through a parallel-for.
pub fn bench_empty(
    ctx: &Arc<HostContext>,
    config: &BenchConfig,
) -> Result<Vec<BenchRecord>, BenchError> {
    let mut records = Vec::new();
    for &n in &config.sizes {
        let timing = measure(config.reps, || {
            let mut acc = 0u64;
            for i in 0..n {
                acc = acc.wrapping_add(black_box(i));
            }
            black_box(acc);
        });
        ctx.check_interrupt()?;
        records.push(row(config, Scheduler::Sequential, n, 0, 0, 0, timing));

        for &w in &config.workers {
            let pool = ThreadPool::with_workers_in(ctx, w)?;
            let timing = measure(config.reps, || {
                for _ in 0..n {
                    pool.push(|| {}).expect("pool accepts work until joined");
                }
                let _ = pool.wait();
            });
            pool.join()?;
            records.push(row(config, Scheduler::Pool, n, 0, w as u64, 0, timing));

            let timing = measure(config.reps, || {
                let _ = parallel_for_in(ctx, 0, n as i64, |_| {}, Some(w), batches_opt(config));
            });
            ctx.check_interrupt()?;
            records.push(row(
                config,
                Scheduler::ParallelFor,
                n,
                0,
                w as u64,
                config.batches as u64,
                timing,
            ));
        }
    }
    Ok(records)
}

/// Spawn+join round trips: `n` plain threads per run and `n` guest
/// threads per run. Totals are recorded; divide by `n` for the marginal
/// per-thread cost.
///
/// The two schedulers are sampled in alternation rather than in blocks:
/// thread spawn cost drifts with OS state (stack caches, CPU frequency)
/// by more than the wrapper overhead being measured, and pairing the
/// samples exposes both schedulers to the same drift.
pub fn bench_thread_spawn(
    ctx: &Arc<HostContext>,
    config: &BenchConfig,
) -> Result<Vec<BenchRecord>, BenchError> {
    let mut records = Vec::new();
    for &n in &config.sizes {
        let run_raw = || {
            let handles: Vec<_> = (0..n).map(|_| thread::spawn(|| {})).collect();
            for handle in handles {
                handle.join().expect("empty body cannot panic");
            }
        };
        let run_guest = || {
            let guests: Vec<GuestThread> = (0..n)
                .map(|_| GuestThread::spawn_in(ctx, || {}).expect("spawn succeeds"))
                .collect();
            for mut guest in guests {
                let _ = guest.join();
            }
        };

        run_raw();
        run_guest();
        let mut raw_samples = Vec::with_capacity(config.reps as usize);
        let mut guest_samples = Vec::with_capacity(config.reps as usize);
        for _ in 0..config.reps {
            let start = Instant::now();
            run_raw();
            raw_samples.push(start.elapsed().as_nanos() as u64);

            let start = Instant::now();
            run_guest();
            guest_samples.push(start.elapsed().as_nanos() as u64);
        }
        ctx.check_interrupt()?;
        raw_samples.sort_unstable();
        guest_samples.sort_unstable();
        let mid = raw_samples.len() / 2;
        records.push(row(
            config,
            Scheduler::Sequential,
            n,
            0,
            0,
            0,
            (raw_samples[mid], raw_samples[0]),
        ));
        records.push(row(
            config,
            Scheduler::RawThreads,
            n,
            0,
            0,
            0,
            (guest_samples[mid], guest_samples[0]),
        ));
    }
    Ok(records)
}

/// Interruption checks in a tight loop, from the host thread and from a
/// single guest thread. `n` is calls per run; per-call cost is
/// `nanos / n`.
pub fn bench_interrupt(
    ctx: &Arc<HostContext>,
    config: &BenchConfig,
) -> Result<Vec<BenchRecord>, BenchError> {
    let mut records = Vec::new();
    for &n in &config.sizes {
        let timing = measure(config.reps, || {
            for _ in 0..n {
                if ctx.check_interrupt().is_err() {
                    break;
                }
            }
        });
        // A fired source invalidates the samples above; bail before
        // recording them.
        ctx.check_interrupt()?;
        records.push(row(config, Scheduler::Sequential, n, 0, 0, 0, timing));

        let (sample_tx, sample_rx) = mpsc::channel::<u64>();
        let child_ctx = Arc::clone(ctx);
        let reps = config.reps;
        let mut guest = GuestThread::spawn_in(ctx, move || {
            for _ in 0..=reps {
                let start = Instant::now();
                for _ in 0..n {
                    if child_ctx.check_interrupt().is_err() {
                        return;
                    }
                }
                if sample_tx.send(start.elapsed().as_nanos() as u64).is_err() {
                    return;
                }
            }
        })?;
        guest.join()?;
        let mut samples: Vec<u64> = sample_rx.try_iter().collect();
        if samples.len() as u64 != reps + 1 {
            return Err(Error::Interrupted.into());
        }
        samples.remove(0);
        samples.sort_unstable();
        records.push(row(
            config,
            Scheduler::RawThreads,
            n,
            0,
            0,
            0,
            (samples[samples.len() / 2], samples[0]),
        ));
    }
    Ok(records)
}

const TAG_KDE: u64 = 1;
const TAG_KENDALL: u64 = 2;

/// A deterministic `d x n` dataset. The stream index mixes a workload
/// tag with the grid point so every dataset differs while the CLI seed
/// alone pins them all.
fn dataset(seed: u64, tag: u64, d: usize, n: usize, normal: bool) -> Arc<Vec<Vec<f64>>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream((tag << 48) | ((d as u64) << 32) | (n as u64 & 0xFFFF_FFFF));
    Arc::new(
        (0..d)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        if normal {
                            StandardNormal.sample(&mut rng)
                        } else {
                            rng.gen()
                        }
                    })
                    .collect()
            })
            .collect(),
    )
}

fn kde_seq(data: &[Vec<f64>]) -> Result<Vec<DensityEstimate>, Error> {
    data.iter().map(|column| kde_gauss(column)).collect()
}

fn kde_pool(pool: &ThreadPool, data: &Arc<Vec<Vec<f64>>>) -> Result<Vec<DensityEstimate>, Error> {
    let handles = (0..data.len())
        .map(|i| {
            let data = Arc::clone(data);
            pool.push_return(move || kde_gauss(&data[i]))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    handles.into_iter().map(|handle| handle.claim()?).collect()
}

fn kde_pfor(
    ctx: &Arc<HostContext>,
    data: &Arc<Vec<Vec<f64>>>,
    workers: usize,
    batches: Option<usize>,
) -> Result<Vec<DensityEstimate>, Error> {
    let slots: Vec<OnceLock<DensityEstimate>> = (0..data.len()).map(|_| OnceLock::new()).collect();
    parallel_for_in(
        ctx,
        0,
        data.len() as i64,
        |i| {
            let estimate = kde_gauss(&data[i as usize]).expect("verified dataset");
            assert!(
                slots[i as usize].set(estimate).is_ok(),
                "index visited twice"
            );
        },
        Some(workers),
        batches,
    )?;
    Ok(slots
        .into_iter()
        .map(|slot| slot.into_inner().expect("every column computed"))
        .collect())
}

fn kendall_pfor(
    ctx: &Arc<HostContext>,
    data: &Arc<Vec<Vec<f64>>>,
    workers: usize,
    batches: Option<usize>,
) -> Result<CorrelationMatrix, Error> {
    let d = data.len();
    let rows: Vec<OnceLock<Vec<f64>>> = (0..d).map(|_| OnceLock::new()).collect();
    parallel_for_in(
        ctx,
        0,
        d as i64,
        |i| {
            let i = i as usize;
            let row: Vec<f64> = ((i + 1)..d)
                .map(|j| kendall_tau_knight(&data[i], &data[j]).expect("verified dataset"))
                .collect();
            assert!(rows[i].set(row).is_ok(), "row visited twice");
        },
        Some(workers),
        batches,
    )?;
    let mut matrix = vec![vec![0.0; d]; d];
    for (i, slot) in rows.iter().enumerate() {
        matrix[i][i] = 1.0;
        let row = slot.get().expect("every row computed");
        for (offset, &tau) in row.iter().enumerate() {
            let j = i + 1 + offset;
            matrix[i][j] = tau;
            matrix[j][i] = tau;
        }
    }
    Ok(matrix)
}

fn ensure_match(
    equal: bool,
    workload: &str,
    scheduler: Scheduler,
    n: u64,
    d: u64,
    workers: usize,
) -> Result<(), BenchError> {
    if equal {
        Ok(())
    } else {
        Err(BenchError::OutputMismatch(format!(
            "{workload} d={d} n={n} workers={workers} scheduler={}",
            scheduler.name()
        )))
    }
}

/// One Gaussian density per variable, sequential vs pool vs parallel-for.
pub fn bench_kde(
    ctx: &Arc<HostContext>,
    config: &BenchConfig,
) -> Result<Vec<BenchRecord>, BenchError> {
    let mut records = Vec::new();
    for &d in &config.dims {
        for &n in &config.sizes {
            let data = dataset(config.seed, TAG_KDE, d as usize, n as usize, true);
            let oracle = kde_seq(&data)?;
            let timing = measure(config.reps, || {
                let _ = kde_seq(&data);
            });
            ctx.check_interrupt()?;
            records.push(row(config, Scheduler::Sequential, n, d, 0, 0, timing));

            for &w in &config.workers {
                let pool = ThreadPool::with_workers_in(ctx, w)?;
                ensure_match(
                    kde_pool(&pool, &data)? == oracle,
                    "kde",
                    Scheduler::Pool,
                    n,
                    d,
                    w,
                )?;
                let timing = measure(config.reps, || {
                    let _ = kde_pool(&pool, &data);
                });
                pool.join()?;
                records.push(row(config, Scheduler::Pool, n, d, w as u64, 0, timing));

                let batches = batches_opt(config);
                ensure_match(
                    kde_pfor(ctx, &data, w, batches)? == oracle,
                    "kde",
                    Scheduler::ParallelFor,
                    n,
                    d,
                    w,
                )?;
                let timing = measure(config.reps, || {
                    let _ = kde_pfor(ctx, &data, w, batches);
                });
                ctx.check_interrupt()?;
                records.push(row(
                    config,
                    Scheduler::ParallelFor,
                    n,
                    d,
                    w as u64,
                    config.batches as u64,
                    timing,
                ));
            }
        }
    }
    Ok(records)
}

/// Kendall correlation matrix, sequential vs pool vs parallel-for.
pub fn bench_kendall(
    ctx: &Arc<HostContext>,
    config: &BenchConfig,
) -> Result<Vec<BenchRecord>, BenchError> {
    let mut records = Vec::new();
    for &d in &config.dims {
        for &n in &config.sizes {
            let data = dataset(config.seed, TAG_KENDALL, d as usize, n as usize, false);
            let oracle = kendall_matrix_seq(&data)?;
            let timing = measure(config.reps, || {
                let _ = kendall_matrix_seq(&data);
            });
            ctx.check_interrupt()?;
            records.push(row(config, Scheduler::Sequential, n, d, 0, 0, timing));

            for &w in &config.workers {
                let pool = ThreadPool::with_workers_in(ctx, w)?;
                ensure_match(
                    kendall_matrix(&data, &pool)? == oracle,
                    "kendall",
                    Scheduler::Pool,
                    n,
                    d,
                    w,
                )?;
                let timing = measure(config.reps, || {
                    let _ = kendall_matrix(&data, &pool);
                });
                pool.join()?;
                records.push(row(config, Scheduler::Pool, n, d, w as u64, 0, timing));

                let batches = batches_opt(config);
                ensure_match(
                    kendall_pfor(ctx, &data, w, batches)? == oracle,
                    "kendall",
                    Scheduler::ParallelFor,
                    n,
                    d,
                    w,
                )?;
                let timing = measure(config.reps, || {
                    let _ = kendall_pfor(ctx, &data, w, batches);
                });
                ctx.check_interrupt()?;
                records.push(row(
                    config,
                    Scheduler::ParallelFor,
                    n,
                    d,
                    w as u64,
                    config.batches as u64,
                    timing,
                ));
            }
        }
    }
    Ok(records)
}
