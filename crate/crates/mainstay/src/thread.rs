//! A thread wrapper whose `join` keeps the host responsive: while waiting
//! for the worker it periodically flushes buffered messages and polls the
//! interrupt source, so output appears and Ctrl-C works even though the
//! host thread is blocked from the caller's point of view.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::Duration;

use crate::error::{panic_message, Error};
use crate::host::{current_host, lock_unpoisoned, HostContext, DEFAULT_PUMP_INTERVAL};

/// One-shot completion gate: opened exactly once by the worker, waited on
/// with a timeout by the joining thread.
struct Gate {
    done: Mutex<bool>,
    cv: Condvar,
}

impl Gate {
    fn new() -> Self {
        Gate {
            done: Mutex::new(false),
            cv: Condvar::new(),
        }
    }

    fn open(&self) {
        *lock_unpoisoned(&self.done) = true;
        self.cv.notify_all();
    }

    /// Waits up to `timeout`; true means the gate is open.
    fn wait_ready(&self, timeout: Duration) -> bool {
        let done = lock_unpoisoned(&self.done);
        let (done, _) = self
            .cv
            .wait_timeout_while(done, timeout, |done| !*done)
            .unwrap_or_else(|poisoned| poisoned.into_inner());
        *done
    }
}

struct TaskShared {
    gate: Gate,
    failure: Mutex<Option<String>>,
}

struct JoinState {
    handle: thread::JoinHandle<()>,
    shared: Arc<TaskShared>,
    ctx: Arc<HostContext>,
}

/// A worker thread tied to a [`HostContext`].
///
/// Differences from a plain OS thread: the body's panic is captured and
/// rethrown at [`join`](GuestThread::join) as [`Error::TaskFailed`], and a
/// host-side join pumps the context (flush buffered output, poll for
/// interruption) every [`pump_interval`](GuestThread::pump_interval) while
/// it waits.
///
/// Dropping a still-joinable `GuestThread` detaches it, like dropping a
/// `std::thread::JoinHandle`.
pub struct GuestThread {
    state: Option<JoinState>,
    pump_interval: Duration,
}

impl GuestThread {
    /// Spawns `body` on a new thread against the process-global context.
    /// Arguments are captured by the closure.
    pub fn spawn<F>(body: F) -> Result<GuestThread, Error>
    where
        F: FnOnce() + Send + 'static,
    {
        Self::spawn_in(&current_host()?, body)
    }

    /// Spawns `body` against an explicit context.
    pub fn spawn_in<F>(ctx: &Arc<HostContext>, body: F) -> Result<GuestThread, Error>
    where
        F: FnOnce() + Send + 'static,
    {
        let shared = Arc::new(TaskShared {
            gate: Gate::new(),
            failure: Mutex::new(None),
        });
        let worker_shared = Arc::clone(&shared);
        let handle = thread::Builder::new()
            .spawn(move || {
                if let Err(payload) = catch_unwind(AssertUnwindSafe(body)) {
                    *lock_unpoisoned(&worker_shared.failure) =
                        Some(panic_message(payload.as_ref()));
                }
                worker_shared.gate.open();
            })
            .map_err(Error::SpawnFailure)?;
        Ok(GuestThread {
            state: Some(JoinState {
                handle,
                shared,
                ctx: Arc::clone(ctx),
            }),
            pump_interval: DEFAULT_PUMP_INTERVAL,
        })
    }

    /// How often a host-side join wakes up to flush and poll.
    pub fn pump_interval(&self) -> Duration {
        self.pump_interval
    }

    /// Adjusts the pump interval. Shorter intervals deliver messages and
    /// notice interruptions sooner at the cost of more host wakeups.
    pub fn set_pump_interval(&mut self, interval: Duration) {
        self.pump_interval = interval;
    }

    /// True until the thread has been joined or detached.
    pub fn joinable(&self) -> bool {
        self.state.is_some()
    }

    /// Waits for the body to finish.
    ///
    /// Called from the host thread, this pumps while waiting: every
    /// [`pump_interval`](Self::pump_interval) it flushes buffered messages
    /// and polls the interrupt source, leaving the wait early once an
    /// interruption is noticed. It still blocks until the body returns, so
    /// the body must observe the interrupt flag to wind down; a body that
    /// never checks will hang the join.
    ///
    /// Called from any other thread, it degrades to a plain blocking join
    /// (pumping elsewhere would require writing to the sink off the host
    /// thread); buffered output then waits for the next host-side flush.
    ///
    /// Errors, in precedence order: [`Error::Interrupted`] if the flag is
    /// set by the time the body finished, [`Error::TaskFailed`] if the body
    /// panicked, [`Error::Sink`] if the final flush failed.
    pub fn join(&mut self) -> Result<(), Error> {
        let state = self.state.take().ok_or(Error::NotJoinable)?;
        if state.ctx.is_host_thread() {
            loop {
                if state.shared.gate.wait_ready(self.pump_interval) {
                    break;
                }
                let _ = state.ctx.flush();
                if state.ctx.is_interrupted() {
                    break;
                }
            }
        }
        let join_result = state.handle.join();
        let flush_result = state.ctx.flush();
        state.ctx.check_interrupt()?;
        if let Err(payload) = join_result {
            // The body runs under catch_unwind, so this is out of an
            // abundance of caution.
            return Err(Error::TaskFailed(panic_message(payload.as_ref())));
        }
        if let Some(message) = lock_unpoisoned(&state.shared.failure).take() {
            return Err(Error::TaskFailed(message));
        }
        flush_result
    }

    /// Releases the thread to run unsupervised. No pumping ever happens
    /// for a detached guest, so its messages only appear when something
    /// else flushes and nobody rethrows its panics; prefer joining.
    pub fn detach(&mut self) -> Result<(), Error> {
        let state = self.state.take().ok_or(Error::NotJoinable)?;
        drop(state.handle);
        Ok(())
    }

    /// Exchanges the underlying threads (and pump intervals) of two
    /// handles.
    pub fn swap(&mut self, other: &mut GuestThread) {
        std::mem::swap(self, other);
    }
}
