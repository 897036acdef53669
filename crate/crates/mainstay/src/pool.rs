//! A fixed-size worker pool with a shared FIFO task queue, host-pumping
//! wait/join, pre-task interruption checks, deferred results, and an
//! inline zero-worker mode.
//!
//! Workers never poll the interrupt source or touch the sink; before each
//! task they read the interrupt flag and the error slot, discarding the
//! task if either is set. The host observes completion through
//! [`wait`](ThreadPool::wait)/[`join`](ThreadPool::join), which pump the
//! context while blocked.

use std::collections::VecDeque;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{mpsc, Arc, Condvar, Mutex};
use std::thread;
use std::time::Duration;

use crate::error::{panic_message, Error};
use crate::host::{current_host, lock_unpoisoned, HostContext, DEFAULT_PUMP_INTERVAL};
use crate::parallel::{auto_batch_count, hardware_cores, BatchPlan};

type Task = Box<dyn FnOnce() + Send + 'static>;

struct PoolState {
    queue: VecDeque<Task>,
    busy: usize,
    stopped: bool,
}

impl PoolState {
    fn idle(&self) -> bool {
        self.queue.is_empty() && self.busy == 0
    }
}

/// State shared between pool handles and worker threads.
struct PoolShared {
    state: Mutex<PoolState>,
    /// Wakes idle workers on push and on stop.
    work_cv: Condvar,
    /// Wakes waiters when the pool drains to idle.
    idle_cv: Condvar,
    first_error: Mutex<Option<String>>,
    ctx: Arc<HostContext>,
}

impl PoolShared {
    /// Runs or discards one dequeued/inline task. Discarding happens when
    /// an interruption is pending (flag read only, never the source) or an
    /// earlier task's error is still unclaimed; the first panic wins the
    /// error slot.
    fn run_task(&self, task: Task) {
        let discard = self.ctx.interrupt_pending() || lock_unpoisoned(&self.first_error).is_some();
        if discard {
            drop(task);
            return;
        }
        if let Err(payload) = catch_unwind(AssertUnwindSafe(task)) {
            let mut slot = lock_unpoisoned(&self.first_error);
            if slot.is_none() {
                *slot = Some(panic_message(payload.as_ref()));
            }
        }
    }
}

fn worker_loop(shared: Arc<PoolShared>) {
    loop {
        let task = {
            let mut state = lock_unpoisoned(&shared.state);
            loop {
                if state.stopped {
                    return;
                }
                if let Some(task) = state.queue.pop_front() {
                    state.busy += 1;
                    break task;
                }
                state = shared
                    .work_cv
                    .wait(state)
                    .unwrap_or_else(|poisoned| poisoned.into_inner());
            }
        };
        shared.run_task(task);
        let mut state = lock_unpoisoned(&shared.state);
        state.busy -= 1;
        let idle = state.idle();
        drop(state);
        if idle {
            shared.idle_cv.notify_all();
        }
    }
}

struct PoolCore {
    shared: Arc<PoolShared>,
    workers: Mutex<Vec<thread::JoinHandle<()>>>,
    n_workers: usize,
    joined: AtomicBool,
    pump_interval_nanos: AtomicU64,
}

impl PoolCore {
    fn retire_workers(&self) {
        let drained: Vec<Task> = {
            let mut state = lock_unpoisoned(&self.shared.state);
            state.stopped = true;
            state.queue.drain(..).collect()
        };
        self.shared.work_cv.notify_all();
        // Dropping discarded tasks outside the lock; their result handles
        // observe the disconnect.
        drop(drained);
        let workers = std::mem::take(&mut *lock_unpoisoned(&self.workers));
        let me = thread::current().id();
        for handle in workers {
            if handle.thread().id() == me {
                // Dropping the last pool handle from inside a worker:
                // joining ourselves would deadlock, so this worker is
                // detached and exits on its own via `stopped`.
                continue;
            }
            let _ = handle.join();
        }
    }
}

impl Drop for PoolCore {
    fn drop(&mut self) {
        self.retire_workers();
    }
}

/// One-shot handle to a task's return value, produced by
/// [`ThreadPool::push_return`].
pub struct ResultHandle<T> {
    rx: mpsc::Receiver<Result<T, String>>,
    ctx: Arc<HostContext>,
}

impl<T> ResultHandle<T> {
    /// Blocks until the task completes, then yields its value, rethrows
    /// its panic as [`Error::TaskFailed`], or reports
    /// [`Error::Interrupted`] if the task was discarded before running.
    ///
    /// This is a plain block without pumping; on the host thread, prefer
    /// claiming after a [`ThreadPool::wait`].
    pub fn claim(self) -> Result<T, Error> {
        match self.rx.recv() {
            Ok(Ok(value)) => Ok(value),
            Ok(Err(message)) => Err(Error::TaskFailed(message)),
            Err(_) => {
                if self.ctx.interrupt_pending() {
                    Err(Error::Interrupted)
                } else {
                    Err(Error::TaskFailed("task discarded".to_owned()))
                }
            }
        }
    }
}

/// A fixed-size thread pool bound to a [`HostContext`].
///
/// Cloning is cheap and clones share the pool, which is what lets a task
/// capture the pool and push more work (nested loops). Workers idle on a
/// blocking condition variable, not a spin loop. Dropping the last handle
/// retires the workers; [`join`](ThreadPool::join) does so while also
/// pumping and reporting errors, so explicit joins are preferred.
#[derive(Clone)]
pub struct ThreadPool {
    core: Arc<PoolCore>,
}

impl ThreadPool {
    /// Pool with one worker per hardware core, on the process-global
    /// context.
    pub fn new() -> Result<ThreadPool, Error> {
        Self::new_in(&current_host()?)
    }

    /// Pool with an explicit worker count, on the process-global context.
    /// Zero workers means every pushed task runs inline on the pushing
    /// thread.
    pub fn with_workers(n_workers: usize) -> Result<ThreadPool, Error> {
        Self::with_workers_in(&current_host()?, n_workers)
    }

    /// [`ThreadPool::new`] against an explicit context.
    pub fn new_in(ctx: &Arc<HostContext>) -> Result<ThreadPool, Error> {
        Self::with_workers_in(ctx, hardware_cores())
    }

    /// [`ThreadPool::with_workers`] against an explicit context.
    pub fn with_workers_in(ctx: &Arc<HostContext>, n_workers: usize) -> Result<ThreadPool, Error> {
        let shared = Arc::new(PoolShared {
            state: Mutex::new(PoolState {
                queue: VecDeque::new(),
                busy: 0,
                stopped: false,
            }),
            work_cv: Condvar::new(),
            idle_cv: Condvar::new(),
            first_error: Mutex::new(None),
            ctx: Arc::clone(ctx),
        });
        let core = PoolCore {
            shared: Arc::clone(&shared),
            workers: Mutex::new(Vec::with_capacity(n_workers)),
            n_workers,
            joined: AtomicBool::new(false),
            pump_interval_nanos: AtomicU64::new(DEFAULT_PUMP_INTERVAL.as_nanos() as u64),
        };
        let pool = ThreadPool {
            core: Arc::new(core),
        };
        for _ in 0..n_workers {
            let worker_shared = Arc::clone(&shared);
            match thread::Builder::new().spawn(move || worker_loop(worker_shared)) {
                Ok(handle) => lock_unpoisoned(&pool.core.workers).push(handle),
                Err(err) => {
                    // Tear down the workers that did start.
                    pool.core.retire_workers();
                    return Err(Error::SpawnFailure(err));
                }
            }
        }
        Ok(pool)
    }

    /// Number of worker threads (0 means inline execution).
    pub fn n_workers(&self) -> usize {
        self.core.n_workers
    }

    /// How often [`wait`](Self::wait)/[`join`](Self::join) wake to flush
    /// and poll while blocked.
    pub fn pump_interval(&self) -> Duration {
        Duration::from_nanos(self.core.pump_interval_nanos.load(Ordering::Relaxed))
    }

    pub fn set_pump_interval(&self, interval: Duration) {
        self.core
            .pump_interval_nanos
            .store(interval.as_nanos() as u64, Ordering::Relaxed);
    }

    /// Enqueues a task (or runs it inline on a zero-worker pool). The
    /// worker dequeuing it first checks for a pending interruption or an
    /// earlier error and discards the task if either is set.
    pub fn push<F>(&self, task: F) -> Result<(), Error>
    where
        F: FnOnce() + Send + 'static,
    {
        self.push_task(Box::new(task))
    }

    fn push_task(&self, task: Task) -> Result<(), Error> {
        if self.core.n_workers == 0 {
            if lock_unpoisoned(&self.core.shared.state).stopped {
                return Err(Error::PoolStopped);
            }
            self.core.shared.run_task(task);
            return Ok(());
        }
        {
            let mut state = lock_unpoisoned(&self.core.shared.state);
            if state.stopped {
                return Err(Error::PoolStopped);
            }
            state.queue.push_back(task);
        }
        self.core.shared.work_cv.notify_one();
        Ok(())
    }

    /// Like [`push`](Self::push) for a task with a return value; the
    /// result is claimed through the returned handle. A panicking task
    /// both settles the handle and occupies the pool's error slot.
    pub fn push_return<T, F>(&self, task: F) -> Result<ResultHandle<T>, Error>
    where
        T: Send + 'static,
        F: FnOnce() -> T + Send + 'static,
    {
        let (tx, rx) = mpsc::channel::<Result<T, String>>();
        let wrapped = move || match catch_unwind(AssertUnwindSafe(task)) {
            Ok(value) => {
                let _ = tx.send(Ok(value));
            }
            Err(payload) => {
                let _ = tx.send(Err(panic_message(payload.as_ref())));
                // Re-raise so the pool's own error handling records it.
                std::panic::resume_unwind(payload);
            }
        };
        self.push(wrapped)?;
        Ok(ResultHandle {
            rx,
            ctx: Arc::clone(&self.core.shared.ctx),
        })
    }

    /// Blocks until the pool is idle (empty queue, no running task),
    /// pumping the context while it waits. The pool stays usable: new
    /// tasks may be pushed afterwards.
    ///
    /// On return it reports, in precedence order: [`Error::Interrupted`]
    /// if an interruption was observed (waiting stops early; workers
    /// discard the backlog on their own), or [`Error::TaskFailed`] with
    /// the first captured task error, emptying the slot so later batches
    /// start clean.
    ///
    /// From a non-host thread this blocks without pumping.
    pub fn wait(&self) -> Result<(), Error> {
        self.wait_until_idle();
        let _ = self.core.shared.ctx.flush();
        self.core.shared.ctx.check_interrupt()?;
        if let Some(message) = lock_unpoisoned(&self.core.shared.first_error).take() {
            return Err(Error::TaskFailed(message));
        }
        Ok(())
    }

    fn wait_until_idle(&self) {
        let shared = &self.core.shared;
        if shared.ctx.is_host_thread() {
            let interval = self.pump_interval();
            loop {
                let idle = {
                    let state = lock_unpoisoned(&shared.state);
                    let (state, _) = shared
                        .idle_cv
                        .wait_timeout_while(state, interval, |s| !s.idle())
                        .unwrap_or_else(|poisoned| poisoned.into_inner());
                    state.idle()
                };
                if idle {
                    break;
                }
                let _ = shared.ctx.flush();
                if shared.ctx.is_interrupted() {
                    break;
                }
            }
        } else {
            let state = lock_unpoisoned(&shared.state);
            let _unused = shared
                .idle_cv
                .wait_while(state, |s| !s.idle())
                .unwrap_or_else(|poisoned| poisoned.into_inner());
        }
    }

    /// [`wait`](Self::wait), then retires the workers: the stop flag is
    /// set, sleepers are woken, the backlog (nonempty only after an
    /// interruption) is dropped, and every worker thread is joined. The
    /// pool refuses tasks afterwards. Workers are retired even when the
    /// wait phase reports an error.
    pub fn join(&self) -> Result<(), Error> {
        if self.core.joined.swap(true, Ordering::SeqCst) {
            return Err(Error::AlreadyJoined);
        }
        let waited = self.wait();
        self.core.retire_workers();
        let _ = self.core.shared.ctx.flush();
        let check = self.core.shared.ctx.check_interrupt();
        waited?;
        check
    }

    /// Non-blocking batched loop: partitions `[begin, end)` (see
    /// [`BatchPlan`]) and pushes one task per batch, returning without
    /// waiting. Observe completion through [`wait`](Self::wait) or
    /// [`join`](Self::join).
    ///
    /// Because it only enqueues, a task may itself call `parallel_for` on
    /// a clone of the pool without deadlocking; the pusher stays counted
    /// as busy until it returns, so idle detection keeps nested work
    /// covered.
    pub fn parallel_for<F>(&self, begin: i64, end: i64, body: F) -> Result<(), Error>
    where
        F: Fn(i64) + Send + Sync + 'static,
    {
        self.parallel_for_batched(begin, end, body, None)
    }

    /// [`parallel_for`](Self::parallel_for) with an explicit batch count.
    pub fn parallel_for_batched<F>(
        &self,
        begin: i64,
        end: i64,
        body: F,
        n_batches: Option<usize>,
    ) -> Result<(), Error>
    where
        F: Fn(i64) + Send + Sync + 'static,
    {
        if begin >= end {
            return Ok(());
        }
        let len = (end as i128 - begin as i128) as u64;
        let batches = n_batches.unwrap_or_else(|| auto_batch_count(len, self.core.n_workers));
        let plan = BatchPlan::balanced(begin, end, batches);
        let body = Arc::new(body);
        for range in plan.ranges() {
            let body = Arc::clone(&body);
            self.push(move || {
                for i in range {
                    body(i);
                }
            })?;
        }
        Ok(())
    }

    /// Non-blocking batched loop over a shared container. Elements are
    /// passed by shared reference, because the tasks only borrow the
    /// container for as long as the pool runs; mutate through interior
    /// mutability (atomics, mutexes). For the plain `&mut [T]` form, use
    /// the free function [`parallel_for_each`](crate::parallel_for_each),
    /// which can prove the borrow safe by joining internally.
    pub fn parallel_for_each<T, F>(&self, items: &Arc<Vec<T>>, body: F) -> Result<(), Error>
    where
        T: Send + Sync + 'static,
        F: Fn(&T) + Send + Sync + 'static,
    {
        self.parallel_for_each_batched(items, body, None)
    }

    /// [`parallel_for_each`](Self::parallel_for_each) with an explicit
    /// batch count.
    pub fn parallel_for_each_batched<T, F>(
        &self,
        items: &Arc<Vec<T>>,
        body: F,
        n_batches: Option<usize>,
    ) -> Result<(), Error>
    where
        T: Send + Sync + 'static,
        F: Fn(&T) + Send + Sync + 'static,
    {
        if items.is_empty() {
            return Ok(());
        }
        let batches =
            n_batches.unwrap_or_else(|| auto_batch_count(items.len() as u64, self.core.n_workers));
        let plan = BatchPlan::balanced(0, items.len() as i64, batches);
        let body = Arc::new(body);
        for range in plan.ranges() {
            let body = Arc::clone(&body);
            let items = Arc::clone(items);
            self.push(move || {
                for i in range {
                    body(&items[i as usize]);
                }
            })?;
        }
        Ok(())
    }
}
