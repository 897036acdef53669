//! Batched parallel loops: partition an index range into balanced batches,
//! push one task per batch, and (for the free functions) join before
//! returning.
//!
//! Batching exists because per-iteration tasks drown in queue traffic:
//! synchronization cost shrinks as batches grow, while dynamic load
//! balancing needs more batches than workers. [`auto_batch_count`] picks a
//! middle ground; every entry point also accepts an explicit batch count.

use std::ops::Range;
use std::sync::Arc;

use crate::error::Error;
use crate::host::{current_host, HostContext};
use crate::pool::ThreadPool;

/// Number of usable CPU cores, falling back to 1 when the platform will
/// not say.
pub fn hardware_cores() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Default batch count: eight batches per worker, clamped so there is at
/// least one batch and no batch is empty.
///
/// Eight per worker keeps queue synchronization rare while leaving enough
/// slack for dynamic scheduling to absorb uneven iteration costs.
pub fn auto_batch_count(n_iterations: u64, n_workers: usize) -> usize {
    let ideal = 8u64.saturating_mul(n_workers.max(1) as u64);
    ideal.clamp(1, n_iterations.max(1)) as usize
}

/// A balanced split of the half-open index range `[begin, end)` into
/// consecutive batches whose sizes differ by at most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPlan {
    boundaries: Vec<i64>,
}

impl BatchPlan {
    /// Splits `[begin, end)` into `n_batches` balanced batches.
    ///
    /// The batch count is clamped to `1..=max(1, end - begin)` so no batch
    /// is empty. An empty range (`end <= begin`) yields a single empty
    /// batch. Pure function of its inputs.
    pub fn balanced(begin: i64, end: i64, n_batches: usize) -> BatchPlan {
        let end = end.max(begin);
        // i128 so the length math cannot overflow for extreme i64 bounds.
        let len = end as i128 - begin as i128;
        let k = (n_batches.max(1) as i128).min(len.max(1));
        let base = len / k;
        let remainder = len % k;
        let mut boundaries = Vec::with_capacity(k as usize + 1);
        let mut bound = begin as i128;
        boundaries.push(begin);
        for i in 0..k {
            bound += base + i128::from(i < remainder);
            boundaries.push(bound as i64);
        }
        BatchPlan { boundaries }
    }

    pub fn begin(&self) -> i64 {
        self.boundaries[0]
    }

    pub fn end(&self) -> i64 {
        *self.boundaries.last().unwrap()
    }

    pub fn n_batches(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// The i-th batch as an index range.
    pub fn batch(&self, i: usize) -> Range<i64> {
        self.boundaries[i]..self.boundaries[i + 1]
    }

    /// All batches in index order; concatenated they reproduce
    /// `[begin, end)` exactly.
    pub fn ranges(&self) -> impl Iterator<Item = Range<i64>> + '_ {
        self.boundaries.windows(2).map(|w| w[0]..w[1])
    }
}

/// Runs `body(i)` for every `i` in `[begin, end)` on a freshly created
/// pool of [`hardware_cores`] workers, returning once every index has been
/// visited exactly once.
///
/// The process-global context must be installed. Bodies run concurrently;
/// writing to shared state is the caller's responsibility to synchronize
/// (disjoint-slot writes are fine).
pub fn parallel_for<F>(begin: i64, end: i64, body: F) -> Result<(), Error>
where
    F: Fn(i64) + Send + Sync,
{
    parallel_for_in(&current_host()?, begin, end, body, None, None)
}

/// [`parallel_for`] with explicit worker and batch counts; `None` means
/// the default ([`hardware_cores`], [`auto_batch_count`]).
pub fn parallel_for_with<F>(
    begin: i64,
    end: i64,
    body: F,
    n_workers: Option<usize>,
    n_batches: Option<usize>,
) -> Result<(), Error>
where
    F: Fn(i64) + Send + Sync,
{
    parallel_for_in(&current_host()?, begin, end, body, n_workers, n_batches)
}

/// [`parallel_for`] against an explicit context.
pub fn parallel_for_in<F>(
    ctx: &Arc<HostContext>,
    begin: i64,
    end: i64,
    body: F,
    n_workers: Option<usize>,
    n_batches: Option<usize>,
) -> Result<(), Error>
where
    F: Fn(i64) + Send + Sync,
{
    let erased: &(dyn Fn(i64) + Send + Sync) = &body;
    // SAFETY: see `run_for`; the pool is joined before this frame returns,
    // so the erased borrow never outlives `body`.
    let erased: &'static (dyn Fn(i64) + Send + Sync) = unsafe { std::mem::transmute(erased) };
    run_for(ctx, begin, end, erased, n_workers, n_batches)
}

/// Applies `body` to every element of `items` in place, in parallel, and
/// returns once all elements have been visited.
///
/// Batches receive disjoint sub-slices, so each element is mutated by
/// exactly one worker with no synchronization needed.
pub fn parallel_for_each<T, F>(items: &mut [T], body: F) -> Result<(), Error>
where
    T: Send,
    F: Fn(&mut T) + Send + Sync,
{
    parallel_for_each_in(&current_host()?, items, body, None, None)
}

/// [`parallel_for_each`] with explicit worker and batch counts.
pub fn parallel_for_each_with<T, F>(
    items: &mut [T],
    body: F,
    n_workers: Option<usize>,
    n_batches: Option<usize>,
) -> Result<(), Error>
where
    T: Send,
    F: Fn(&mut T) + Send + Sync,
{
    parallel_for_each_in(&current_host()?, items, body, n_workers, n_batches)
}

/// [`parallel_for_each`] against an explicit context.
pub fn parallel_for_each_in<T, F>(
    ctx: &Arc<HostContext>,
    items: &mut [T],
    body: F,
    n_workers: Option<usize>,
    n_batches: Option<usize>,
) -> Result<(), Error>
where
    T: Send,
    F: Fn(&mut T) + Send + Sync,
{
    if items.is_empty() {
        return Ok(());
    }
    let workers = n_workers.unwrap_or_else(hardware_cores);
    let batches = n_batches.unwrap_or_else(|| auto_batch_count(items.len() as u64, workers));
    let plan = BatchPlan::balanced(0, items.len() as i64, batches);

    struct SendPtr<T>(*mut T);
    unsafe impl<T: Send> Send for SendPtr<T> {}
    unsafe impl<T: Send> Sync for SendPtr<T> {}
    impl<T> SendPtr<T> {
        // Method receiver so closures capture the wrapper, not the field.
        fn get(&self) -> *mut T {
            self.0
        }
    }

    let base = SendPtr(items.as_mut_ptr());
    let body = &body;
    // The typed work lives in one closure so the pushed tasks only ever
    // see batch offsets; that keeps the element type out of the task's
    // type, which must be `'static`.
    let runner = move |start: usize, len: usize| {
        // SAFETY: batches are disjoint, so concurrent calls hand out
        // non-overlapping sub-slices of a live allocation.
        let chunk = unsafe { std::slice::from_raw_parts_mut(base.get().add(start), len) };
        for item in chunk {
            body(item);
        }
    };
    let erased: &(dyn Fn(usize, usize) + Send + Sync) = &runner;
    // SAFETY: see `run_for`; the pool is joined before this frame returns
    // on every path, so no task outlives `runner`, `body`, or `items`.
    let erased: &'static (dyn Fn(usize, usize) + Send + Sync) =
        unsafe { std::mem::transmute(erased) };

    let pool = ThreadPool::with_workers_in(ctx, workers)?;
    let mut push_error = None;
    for range in plan.ranges() {
        let start = range.start as usize;
        let len = (range.end - range.start) as usize;
        if let Err(err) = pool.push(move || erased(start, len)) {
            push_error = Some(err);
            break;
        }
    }
    let joined = pool.join();
    match push_error {
        Some(err) => Err(err),
        None => joined,
    }
}

/// Shared core of the index-based loops: plan, push, join.
///
/// The `'static` on `body` is a lie told by the callers via transmute; the
/// contract making it sound is that this function joins the pool before
/// returning on every path, including unwinds (the pool's drop also joins
/// its workers). Nothing here may hand `body` to anything that outlives
/// the join.
fn run_for(
    ctx: &Arc<HostContext>,
    begin: i64,
    end: i64,
    body: &'static (dyn Fn(i64) + Send + Sync),
    n_workers: Option<usize>,
    n_batches: Option<usize>,
) -> Result<(), Error> {
    if begin >= end {
        return Ok(());
    }
    let workers = n_workers.unwrap_or_else(hardware_cores);
    let len = (end as i128 - begin as i128) as u64;
    let batches = n_batches.unwrap_or_else(|| auto_batch_count(len, workers));
    let plan = BatchPlan::balanced(begin, end, batches);
    let pool = ThreadPool::with_workers_in(ctx, workers)?;
    let mut push_error = None;
    for range in plan.ranges() {
        if let Err(err) = pool.push(move || {
            for i in range {
                body(i);
            }
        }) {
            push_error = Some(err);
            break;
        }
    }
    let joined = pool.join();
    match push_error {
        Some(err) => Err(err),
        None => joined,
    }
}
