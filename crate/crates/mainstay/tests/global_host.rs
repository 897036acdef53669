//! Lifecycle of the process-wide host slot. Everything lives in one test
//! function because the steps depend on install order, and the global
//! slot is shared by the whole process.

use std::io::{self, Write};
use std::sync::mpsc;
use std::thread;

use mainstay::{current_host, init_host, init_host_with_sink, Error, GuestThread, Trigger};

struct NullSink;

impl Write for NullSink {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

#[test]
fn global_slot_is_claimed_by_one_thread_until_it_reinstalls() {
    assert!(matches!(current_host(), Err(Error::NotInitialized)));

    // A dedicated thread claims the slot and stays alive while the main
    // thread probes it.
    let (cmd_tx, cmd_rx) = mpsc::channel::<&'static str>();
    let (done_tx, done_rx) = mpsc::channel::<Result<(), Error>>();
    let owner = thread::spawn(move || {
        for cmd in cmd_rx {
            let outcome = match cmd {
                "claim" => init_host_with_sink(Trigger::new(), NullSink).map(|_| ()),
                "reclaim" => init_host_with_sink(Trigger::new(), NullSink).map(|_| ()),
                _ => unreachable!(),
            };
            done_tx.send(outcome).unwrap();
        }
    });

    cmd_tx.send("claim").unwrap();
    done_rx.recv().unwrap().unwrap();

    // Another thread cannot steal an installed slot...
    assert!(matches!(
        init_host(Trigger::new()),
        Err(Error::AlreadyInitializedElsewhere)
    ));

    // ...but the owning thread may replace its own installation.
    cmd_tx.send("reclaim").unwrap();
    done_rx.recv().unwrap().unwrap();

    // The context is reachable from any thread once installed.
    let ctx = current_host().unwrap();
    assert!(!ctx.is_host_thread());
    thread::spawn(|| {
        current_host().unwrap();
    })
    .join()
    .unwrap();

    // Spawning against the global slot works from a non-host thread; the
    // join simply blocks without pumping.
    let mut guest = GuestThread::spawn(|| {}).unwrap();
    guest.join().unwrap();

    drop(cmd_tx);
    owner.join().unwrap();
}
