//! Interrupt source backed by the operating system's interrupt signal.
//!
//! The handler only raises a process-wide flag; the host thread notices it
//! on its next poll. A second signal arriving while the first is still
//! pending restores the default disposition and re-raises, so a user who
//! presses Ctrl-C twice force-terminates a program that stopped pumping.

use std::io;
use std::sync::atomic::{AtomicBool, Ordering};

use crate::host::InterruptSource;

static SIGNAL_SEEN: AtomicBool = AtomicBool::new(false);

extern "C" fn on_signal(signum: libc::c_int) {
    // Only atomics and async-signal-safe libc calls in here.
    if SIGNAL_SEEN.swap(true, Ordering::SeqCst) {
        unsafe {
            libc::signal(signum, libc::SIG_DFL);
            libc::raise(signum);
        }
    }
}

/// An [`InterruptSource`] that fires once the process receives SIGINT.
///
/// [`install`](SignalSource::install) replaces the process's SIGINT
/// disposition, so it composes poorly with other signal handling; embedders
/// that own signal handling should feed a [`Trigger`](crate::Trigger) or
/// [`FnSource`](crate::FnSource) instead.
#[derive(Debug)]
pub struct SignalSource {
    _private: (),
}

impl SignalSource {
    /// Registers the SIGINT handler and returns the source. Installing
    /// again is harmless.
    pub fn install() -> io::Result<Self> {
        unsafe {
            let mut action: libc::sigaction = std::mem::zeroed();
            action.sa_sigaction = on_signal as extern "C" fn(libc::c_int) as libc::sighandler_t;
            action.sa_flags = libc::SA_RESTART;
            libc::sigemptyset(&mut action.sa_mask);
            if libc::sigaction(libc::SIGINT, &action, std::ptr::null_mut()) != 0 {
                return Err(io::Error::last_os_error());
            }
        }
        Ok(SignalSource { _private: () })
    }

    /// Forgets a pending signal, e.g. after the interruption has been
    /// handled and the interrupt flag reset.
    pub fn clear(&self) {
        SIGNAL_SEEN.store(false, Ordering::SeqCst);
    }

    /// True when a signal has arrived and not been cleared.
    pub fn seen(&self) -> bool {
        SIGNAL_SEEN.load(Ordering::SeqCst)
    }
}

impl InterruptSource for SignalSource {
    fn poll(&self) -> bool {
        SIGNAL_SEEN.load(Ordering::SeqCst)
    }
}
