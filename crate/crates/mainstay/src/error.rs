use std::any::Any;
use std::io;

/// Errors raised across the host context, guest threads, the pool, and the
/// statistical kernels.
#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    /// A user-requested interruption was observed. Callers are expected to
    /// unwind, release resources, and return control to the host.
    #[error("call interrupted by the user")]
    Interrupted,

    /// A different thread already initialized the process-wide host context.
    #[error("host context already initialized by another thread")]
    AlreadyInitializedElsewhere,

    /// No host context has been installed yet; call `init_host` first.
    #[error("host context not initialized")]
    NotInitialized,

    /// The operation is only meaningful on the host thread.
    #[error("operation requires the host thread")]
    NotHostThread,

    /// The output sink rejected a write during a host-side flush.
    #[error("sink write failed: {0}")]
    Sink(#[source] io::Error),

    /// The operating system refused to start a thread.
    #[error("thread spawn failed: {0}")]
    SpawnFailure(#[source] io::Error),

    /// A task or thread body raised; the message is the panic payload.
    #[error("task failed: {0}")]
    TaskFailed(String),

    /// The guest thread was already joined or detached.
    #[error("thread is not joinable")]
    NotJoinable,

    /// The pool no longer accepts tasks because it was joined.
    #[error("pool is stopped")]
    PoolStopped,

    /// The pool was joined a second time.
    #[error("pool already joined")]
    AlreadyJoined,

    /// Input sequences have different lengths.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Every pair is tied in one of the variables; the correlation
    /// denominator is zero.
    #[error("all pairs tied in one variable")]
    AllTied,

    /// The sample admits no positive bandwidth (constant or empty input).
    #[error("degenerate sample: bandwidth would be zero")]
    DegenerateSample,

    /// The sample contains a NaN or infinite value.
    #[error("sample contains a non-finite value")]
    NonFinite,
}

pub(crate) fn panic_message(payload: &(dyn Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_owned()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "task panicked".to_owned()
    }
}
