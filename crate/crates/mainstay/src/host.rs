//! The host context: buffered printing plus a two-level interruption
//! protocol for programs whose outer environment is single threaded.
//!
//! Worker threads never touch the output sink and never poll the interrupt
//! source. They enqueue messages into a shared buffer and read one atomic
//! flag. Only the host thread (the thread that created the context) drains
//! the buffer into the sink and polls the source; when the source fires, the
//! host raises the flag so every worker can see it.

use std::cell::Cell;
use std::collections::VecDeque;
use std::io::{self, Write};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};
use std::time::Duration;

use crate::error::Error;

/// How long a pumping join waits between flush-and-poll rounds.
pub const DEFAULT_PUMP_INTERVAL: Duration = Duration::from_millis(250);

/// Lock a mutex, ignoring poisoning.
///
/// Every mutex in this crate guards data that stays consistent across a
/// panic at any await-free point, so a poisoned lock carries no information
/// we care about.
pub(crate) fn lock_unpoisoned<T>(mutex: &Mutex<T>) -> MutexGuard<'_, T> {
    mutex
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner())
}

/// Something the host thread can poll to learn whether the embedder asked
/// for an interruption.
///
/// Only the host thread ever calls `poll`; implementations still must be
/// `Send + Sync` because the context holding them is shared across threads.
pub trait InterruptSource: Send + Sync {
    /// Returns true when the embedder signaled an interruption.
    fn poll(&self) -> bool;
}

/// Adapter turning any predicate into an [`InterruptSource`].
pub struct FnSource<F>(pub F);

impl<F> InterruptSource for FnSource<F>
where
    F: Fn() -> bool + Send + Sync,
{
    fn poll(&self) -> bool {
        (self.0)()
    }
}

/// A programmatic interrupt source, mostly for tests and embedders that
/// deliver cancellation through their own channels.
///
/// Clones share the same underlying state, so a test can keep one handle
/// and hand another to the context.
#[derive(Clone, Debug, Default)]
pub struct Trigger {
    fired: Arc<AtomicBool>,
}

impl Trigger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Marks the source as fired; the next host-side poll observes it.
    pub fn fire(&self) {
        self.fired.store(true, Ordering::SeqCst);
    }

    /// Clears the source. Does not clear a context's interrupt flag; that
    /// takes [`HostContext::reset_interrupt`].
    pub fn reset(&self) {
        self.fired.store(false, Ordering::SeqCst);
    }

    pub fn is_fired(&self) -> bool {
        self.fired.load(Ordering::SeqCst)
    }
}

impl InterruptSource for Trigger {
    fn poll(&self) -> bool {
        self.is_fired()
    }
}

/// Tokens distinguishing host threads of different contexts. 0 is reserved
/// for "never a host".
static NEXT_TOKEN: AtomicU64 = AtomicU64::new(1);

thread_local! {
    /// Token of the context this thread most recently created, if any.
    /// Thread-local storage keeps `is_host_thread` a couple of loads, with
    /// no cross-thread traffic.
    static HOST_MARK: Cell<u64> = const { Cell::new(0) };
}

/// Shared state for printing and interruption in a single-threaded host
/// environment.
///
/// The thread that constructs the context becomes its host. Messages
/// [`print`](HostContext::print)ed from any thread are buffered; only the
/// host writes them to the sink. The interrupt source is polled only by the
/// host, which publishes the result in an atomic flag that worker threads
/// read cheaply via [`is_interrupted`](HostContext::is_interrupted).
///
/// A context stays usable across top-level operations, but the interrupt
/// flag is sticky: once the host notices an interruption, every check keeps
/// reporting it until the host calls
/// [`reset_interrupt`](HostContext::reset_interrupt). Call it between
/// independent operations, exactly like an embedder clears its own
/// interrupted state after unwinding.
pub struct HostContext {
    token: u64,
    interrupted: AtomicBool,
    buffer: Mutex<VecDeque<Vec<u8>>>,
    source: Box<dyn InterruptSource>,
    sink: Mutex<Box<dyn Write + Send>>,
}

impl HostContext {
    /// Creates a context writing to standard output. The calling thread
    /// becomes the host.
    pub fn new<S>(source: S) -> Arc<Self>
    where
        S: InterruptSource + 'static,
    {
        Self::with_sink(source, io::stdout())
    }

    /// Creates a context with an explicit sink. The calling thread becomes
    /// the host.
    ///
    /// If the same thread creates a second context, the thread's host mark
    /// moves to the new one: `is_host_thread` on the older context then
    /// reports false and its buffered messages can no longer be flushed.
    pub fn with_sink<S, W>(source: S, sink: W) -> Arc<Self>
    where
        S: InterruptSource + 'static,
        W: Write + Send + 'static,
    {
        let token = NEXT_TOKEN.fetch_add(1, Ordering::Relaxed);
        HOST_MARK.with(|mark| mark.set(token));
        Arc::new(HostContext {
            token,
            interrupted: AtomicBool::new(false),
            buffer: Mutex::new(VecDeque::new()),
            source: Box::new(source),
            sink: Mutex::new(Box::new(sink)),
        })
    }

    /// True when the calling thread is this context's host.
    #[inline]
    pub fn is_host_thread(&self) -> bool {
        HOST_MARK.with(|mark| mark.get()) == self.token
    }

    /// Enqueues one message. Called from the host, it also flushes the
    /// whole buffer (including `msg`) to the sink; sink errors are
    /// swallowed here and surface on an explicit [`flush`](Self::flush).
    ///
    /// A message is delivered as one unit: concurrent prints never splice
    /// into each other.
    pub fn print(&self, msg: impl AsRef<[u8]>) {
        lock_unpoisoned(&self.buffer).push_back(msg.as_ref().to_vec());
        if self.is_host_thread() {
            let _ = self.flush();
        }
    }

    /// Drains the buffer into the sink, oldest message first.
    ///
    /// Only the host writes; from any other thread this is a no-op
    /// returning `Ok(())`, so code that may run on either side can call it
    /// unconditionally.
    ///
    /// If a sink write fails, the failed message is dropped (its bytes are
    /// in an unknown partial state), the remaining messages are kept for a
    /// later flush, and the error is returned.
    pub fn flush(&self) -> Result<(), Error> {
        if !self.is_host_thread() {
            return Ok(());
        }
        let drained: Vec<Vec<u8>> = {
            let mut buffer = lock_unpoisoned(&self.buffer);
            if buffer.is_empty() {
                return Ok(());
            }
            buffer.drain(..).collect()
        };
        let mut sink = lock_unpoisoned(&self.sink);
        let mut pending = drained.into_iter();
        while let Some(msg) = pending.next() {
            if let Err(err) = sink.write_all(&msg) {
                drop(sink);
                let mut buffer = lock_unpoisoned(&self.buffer);
                for unsent in pending.rev() {
                    buffer.push_front(unsent);
                }
                return Err(Error::Sink(err));
            }
        }
        sink.flush().map_err(Error::Sink)
    }

    /// Reports the interruption status.
    ///
    /// From the host: flushes pending messages, polls the interrupt source,
    /// and raises the shared flag if the source fired. From any other
    /// thread: reads the flag and nothing else, so the call stays cheap and
    /// never blocks on the buffer.
    #[inline]
    pub fn is_interrupted(&self) -> bool {
        self.is_interrupted_if(true)
    }

    /// Like [`is_interrupted`](Self::is_interrupted), but short-circuits to
    /// false when `condition` is false, performing no check at all. Useful
    /// to thin out checks in hot loops, e.g. `is_interrupted_if(i % 20 == 0)`.
    #[inline]
    pub fn is_interrupted_if(&self, condition: bool) -> bool {
        if !condition {
            return false;
        }
        if self.is_host_thread() {
            if self.interrupted.load(Ordering::SeqCst) {
                return true;
            }
            let _ = self.flush();
            if self.source.poll() {
                self.interrupted.store(true, Ordering::SeqCst);
                return true;
            }
            false
        } else {
            self.interrupted.load(Ordering::SeqCst)
        }
    }

    /// Raises [`Error::Interrupted`] when an interruption has been
    /// observed; otherwise does nothing.
    #[inline]
    pub fn check_interrupt(&self) -> Result<(), Error> {
        self.check_interrupt_if(true)
    }

    /// Conditional form of [`check_interrupt`](Self::check_interrupt).
    #[inline]
    pub fn check_interrupt_if(&self, condition: bool) -> Result<(), Error> {
        if self.is_interrupted_if(condition) {
            Err(Error::Interrupted)
        } else {
            Ok(())
        }
    }

    /// Reads the raw interrupt flag without polling the source or touching
    /// the buffer, from any thread. This is the cheapest possible check and
    /// what pool workers use between tasks.
    #[inline]
    pub fn interrupt_pending(&self) -> bool {
        self.interrupted.load(Ordering::SeqCst)
    }

    /// Clears the interrupt flag so the context can serve another top-level
    /// operation. Host thread only.
    ///
    /// The flag is deliberately sticky until this is called: a single user
    /// interruption must wind down everything in flight, not just the first
    /// call that notices it. Forgetting to reset makes every subsequent
    /// check report an interruption.
    pub fn reset_interrupt(&self) -> Result<(), Error> {
        if !self.is_host_thread() {
            return Err(Error::NotHostThread);
        }
        self.interrupted.store(false, Ordering::SeqCst);
        Ok(())
    }

    #[cfg(test)]
    fn hold_buffer_for_test(&self) -> MutexGuard<'_, VecDeque<Vec<u8>>> {
        lock_unpoisoned(&self.buffer)
    }
}

impl std::fmt::Debug for HostContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HostContext")
            .field("token", &self.token)
            .field("interrupted", &self.interrupted.load(Ordering::SeqCst))
            .finish_non_exhaustive()
    }
}

/// The process-global context slot used by the convenience constructors.
static INSTALLED: RwLock<Option<Arc<HostContext>>> = RwLock::new(None);

/// Installs a process-global context writing to standard output and makes
/// the calling thread its host. Returns the context, which is also
/// reachable via [`current_host`].
///
/// Call this once at startup, before spawning guest threads. Calling again
/// from the host thread replaces the context (fresh buffer, cleared flag);
/// calling from any other thread fails with
/// [`Error::AlreadyInitializedElsewhere`]. Threads and pools hold on to the
/// context they were created with, so replacing the global slot does not
/// re-home already-running workers.
pub fn init_host<S>(source: S) -> Result<Arc<HostContext>, Error>
where
    S: InterruptSource + 'static,
{
    init_host_with_sink(source, io::stdout())
}

/// [`init_host`] with an explicit sink.
pub fn init_host_with_sink<S, W>(source: S, sink: W) -> Result<Arc<HostContext>, Error>
where
    S: InterruptSource + 'static,
    W: Write + Send + 'static,
{
    let mut slot = INSTALLED.write().unwrap_or_else(|p| p.into_inner());
    if let Some(existing) = slot.as_ref() {
        if !existing.is_host_thread() {
            return Err(Error::AlreadyInitializedElsewhere);
        }
    }
    let ctx = HostContext::with_sink(source, sink);
    *slot = Some(Arc::clone(&ctx));
    Ok(ctx)
}

/// Returns the context installed by [`init_host`], from any thread.
pub fn current_host() -> Result<Arc<HostContext>, Error> {
    INSTALLED
        .read()
        .unwrap_or_else(|p| p.into_inner())
        .clone()
        .ok_or(Error::NotInitialized)
}
