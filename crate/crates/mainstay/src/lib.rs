//! Cooperative concurrency for programs embedded in a single-threaded
//! host environment.
//!
//! Many embedding environments (interpreters, plugin hosts, scripting
//! runtimes) allow only one thread to write to the console or to ask
//! whether the user requested cancellation. This crate keeps worker
//! threads inside those rules: messages printed from workers are
//! buffered and released only by the host thread, and interruption is a
//! flag the host latches from a pluggable source while workers read it
//! for a few nanoseconds per check.
//!
//! The layers, bottom to top:
//!
//! - [`HostContext`]: message buffering, interrupt polling, and the
//!   host/worker distinction itself.
//! - [`GuestThread`]: a thread wrapper whose `join` pumps messages and
//!   interrupt checks instead of blocking blindly.
//! - [`ThreadPool`]: an interruptible pool with task handles, panic
//!   containment, and non-blocking nested loops.
//! - [`parallel_for`]/[`parallel_for_each`]: batched loops over index
//!   ranges and slices.
//! - [`kernels`]: Gaussian kernel density estimation and Kendall
//!   correlation matrices, sequential and parallel.
//!
//! # Quick start
//!
//! ```
//! use std::sync::Arc;
//! use mainstay::{init_host, FnSource, GuestThread};
//!
//! fn main() -> Result<(), mainstay::Error> {
//!     // The calling thread becomes the host thread.
//!     let ctx = init_host(FnSource(|| false))?;
//!
//!     let worker_ctx = Arc::clone(&ctx);
//!     let mut guest = GuestThread::spawn(move || {
//!         worker_ctx.print("buffered until the host flushes\n");
//!     })?;
//!     guest.join()?; // pumps messages and interrupt checks while waiting
//!     Ok(())
//! }
//! ```
//!
//! Tests and embedded scenarios that need isolation skip the global slot
//! and build explicit contexts with [`HostContext::with_sink`].

pub mod error;
pub mod host;
pub mod kernels;
pub mod parallel;
pub mod pool;
#[cfg(unix)]
pub mod signal;
pub mod thread;

#[cfg(test)]
pub(crate) mod test_sink;

pub use error::Error;
pub use host::{
    current_host, init_host, init_host_with_sink, FnSource, HostContext, InterruptSource, Trigger,
    DEFAULT_PUMP_INTERVAL,
};
pub use parallel::{
    auto_batch_count, hardware_cores, parallel_for, parallel_for_each, parallel_for_each_in,
    parallel_for_each_with, parallel_for_in, parallel_for_with, BatchPlan,
};
pub use pool::{ResultHandle, ThreadPool};
#[cfg(unix)]
pub use signal::SignalSource;
pub use thread::GuestThread;

// Every code block in the guide compiles and runs as a doctest, so the
// book cannot drift from the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/host-context.md")]
    mod host_context {}
    #[doc = include_str!("../../../book/src/guest-threads.md")]
    mod guest_threads {}
    #[doc = include_str!("../../../book/src/thread-pool.md")]
    mod thread_pool {}
    #[doc = include_str!("../../../book/src/parallel-loops.md")]
    mod parallel_loops {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels_chapter {}
    #[doc = include_str!("../../../book/src/benchmarking.md")]
    mod benchmarking {}
}
