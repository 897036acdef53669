//! In-memory sink shared by the unit tests: records bytes plus the
//! identity of every writing thread, and can fail on demand.

use std::io::{self, Write};
use std::sync::{Arc, Mutex};
use std::thread;

use crate::host::lock_unpoisoned;

#[derive(Clone, Default)]
pub(crate) struct TestSink {
    state: Arc<Mutex<SinkState>>,
}

#[derive(Default)]
struct SinkState {
    bytes: Vec<u8>,
    writers: Vec<thread::ThreadId>,
    fail_next: bool,
}

impl TestSink {
    pub(crate) fn contents(&self) -> Vec<u8> {
        lock_unpoisoned(&self.state).bytes.clone()
    }

    pub(crate) fn text(&self) -> String {
        String::from_utf8(self.contents()).unwrap()
    }

    pub(crate) fn writers(&self) -> Vec<thread::ThreadId> {
        lock_unpoisoned(&self.state).writers.clone()
    }

    /// Makes the next write return an error instead of recording bytes.
    pub(crate) fn fail_next(&self) {
        lock_unpoisoned(&self.state).fail_next = true;
    }
}

impl Write for TestSink {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let mut state = lock_unpoisoned(&self.state);
        if state.fail_next {
            state.fail_next = false;
            return Err(io::Error::other("sink rejected write"));
        }
        state.writers.push(thread::current().id());
        state.bytes.extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}
