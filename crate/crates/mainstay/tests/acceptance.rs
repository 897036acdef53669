//! Acceptance suite: one test per stated criterion, exercising only the
//! public API. The tests share a lock so timing-sensitive measurements
//! never overlap; run them alone (this binary already is alone under
//! `cargo test`) for the cleanest numbers.

use std::io::{self, Write};
use std::sync::atomic::{AtomicBool, AtomicI64, Ordering};
use std::sync::{mpsc, Arc, Mutex, MutexGuard};
use std::thread;
use std::time::{Duration, Instant};

use mainstay::kernels::{
    kde_gauss, kde_gauss_with, kendall_matrix, kendall_matrix_seq, kendall_tau_brute,
    kendall_tau_knight,
};
use mainstay::{
    parallel_for_in, BatchPlan, Error, FnSource, GuestThread, HostContext, ThreadPool, Trigger,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

/// Serializes the criteria; medians and CPU-time measurements must not
/// compete with each other for cores.
static GATE: Mutex<()> = Mutex::new(());

fn gate() -> MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

#[derive(Clone, Default)]
struct CaptureSink {
    bytes: Arc<Mutex<Vec<u8>>>,
}

impl CaptureSink {
    fn text(&self) -> String {
        String::from_utf8(self.bytes.lock().unwrap().clone()).unwrap()
    }

    fn is_empty(&self) -> bool {
        self.bytes.lock().unwrap().is_empty()
    }
}

impl Write for CaptureSink {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.bytes.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

fn quiet_ctx(sink: &CaptureSink) -> Arc<HostContext> {
    HostContext::with_sink(Trigger::new(), sink.clone())
}

#[test]
fn criterion_01_message_exactly_once_under_stress() {
    let _gate = gate();
    let started = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0xC1);
    for rep in 0..100 {
        let sink = CaptureSink::default();
        let ctx = quiet_ctx(&sink);
        let jitter: u64 = rng.gen_range(1..8);
        let mut guests = Vec::new();
        for _ in 0..2 {
            let worker_ctx = Arc::clone(&ctx);
            guests.push(
                GuestThread::spawn_in(&ctx, move || {
                    for i in 0..100u64 {
                        worker_ctx.print("Hi!\n");
                        if i % jitter == 0 {
                            thread::yield_now();
                        }
                    }
                })
                .unwrap(),
            );
        }
        for mut guest in guests {
            guest.join().unwrap();
        }
        ctx.flush().unwrap();
        let text = sink.text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 200, "rep {rep}: lost or duplicated messages");
        assert!(
            lines.iter().all(|l| *l == "Hi!"),
            "rep {rep}: interleaving corrupted a message"
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(10), "stress took {elapsed:?}");
    println!("criterion 1 PASS: 100 reps x 200 messages, all intact, in {elapsed:?}");
}

#[test]
fn criterion_02_interrupting_a_sleepy_party_is_deterministic() {
    let _gate = gate();
    for rep in 0..50 {
        let sink = CaptureSink::default();
        let trigger = Trigger::new();
        let ctx = HostContext::with_sink(trigger.clone(), sink.clone());

        let spawn_party_guest = |id: u64| {
            let worker_ctx = Arc::clone(&ctx);
            GuestThread::spawn_in(&ctx, move || {
                thread::sleep(Duration::from_millis(1000));
                worker_ctx.print(format!("{id} slept for one round\n"));
                if worker_ctx.is_interrupted() {
                    return;
                }
                thread::sleep(Duration::from_millis(1000));
                worker_ctx.print(format!("{id} slept for two rounds\n"));
            })
            .unwrap()
        };
        let mut t1 = spawn_party_guest(1);
        let mut t2 = spawn_party_guest(2);

        let fired_at: Arc<Mutex<Option<Instant>>> = Arc::new(Mutex::new(None));
        let timer = {
            let trigger = trigger.clone();
            let fired_at = Arc::clone(&fired_at);
            thread::spawn(move || {
                thread::sleep(Duration::from_millis(500));
                trigger.fire();
                *fired_at.lock().unwrap() = Some(Instant::now());
            })
        };

        let first = t1.join();
        let first_back = Instant::now();
        let second = t2.join();
        let second_back = Instant::now();
        timer.join().unwrap();

        assert!(
            matches!(first, Err(Error::Interrupted)),
            "rep {rep}: {first:?}"
        );
        assert!(
            matches!(second, Err(Error::Interrupted)),
            "rep {rep}: {second:?}"
        );
        let text = sink.text();
        assert!(
            text.contains("1 slept for one round"),
            "rep {rep}: {text:?}"
        );
        assert!(
            text.contains("2 slept for one round"),
            "rep {rep}: {text:?}"
        );
        assert!(!text.contains("two rounds"), "rep {rep}: {text:?}");
        let fired = fired_at.lock().unwrap().expect("timer never fired");
        assert!(
            first_back.duration_since(fired) < Duration::from_millis(1500),
            "rep {rep}: first join lagged the trigger"
        );
        assert!(
            second_back.duration_since(fired) < Duration::from_millis(1500),
            "rep {rep}: second join lagged the trigger"
        );
    }
    println!("criterion 2 PASS: 50 reps, round-1 delivered, Interrupted raised, round-2 absent");
}

#[test]
fn criterion_03_conditional_checks_gate_the_flag() {
    let _gate = gate();
    let sink = CaptureSink::default();
    let ctx = HostContext::with_sink(FnSource(|| true), sink.clone());
    assert!(
        ctx.is_interrupted(),
        "host poll should latch the always-true source"
    );
    for _ in 0..1_000_000u32 {
        ctx.check_interrupt_if(false).unwrap();
    }
    let on_child: Result<(), Error> = {
        let ctx = Arc::clone(&ctx);
        thread::spawn(move || {
            for _ in 0..1_000_000u32 {
                ctx.check_interrupt_if(false)?;
            }
            Ok(())
        })
        .join()
        .unwrap()
    };
    on_child.unwrap();
    assert!(matches!(
        ctx.check_interrupt_if(true),
        Err(Error::Interrupted)
    ));
    println!("criterion 3 PASS: 2 x 10^6 gated checks stayed silent; first armed check raised");
}

#[test]
fn criterion_04_pool_fills_match_sequential_for_every_worker_count() {
    let _gate = gate();
    let n = 10_000usize;
    let expected: Vec<i64> = (0..n as i64).map(|i| i * 2 + 1).collect();
    for workers in [0usize, 1, 2, 8] {
        let sink = CaptureSink::default();
        let ctx = quiet_ctx(&sink);
        let pool = ThreadPool::with_workers_in(&ctx, workers).unwrap();
        let slots: Arc<Vec<AtomicI64>> = Arc::new((0..n).map(|_| AtomicI64::new(0)).collect());
        let host_id = thread::current().id();
        let inline_ok = Arc::new(AtomicBool::new(true));
        for i in 0..n {
            let slots = Arc::clone(&slots);
            let inline_ok = Arc::clone(&inline_ok);
            pool.push(move || {
                if workers == 0 && thread::current().id() != host_id {
                    inline_ok.store(false, Ordering::Relaxed);
                }
                slots[i].store(i as i64 * 2 + 1, Ordering::Relaxed);
            })
            .unwrap();
        }
        pool.join().unwrap();
        let got: Vec<i64> = slots.iter().map(|s| s.load(Ordering::Relaxed)).collect();
        assert_eq!(got, expected, "workers={workers}");
        assert!(
            inline_ok.load(Ordering::Relaxed),
            "a zero-worker task escaped the pushing thread"
        );
    }
    println!("criterion 4 PASS: 10^4 tasks equal the sequential fill for workers in {{0,1,2,8}}");
}

#[test]
fn criterion_05_pool_survives_wait_and_accepts_more_work() {
    let _gate = gate();
    let sink = CaptureSink::default();
    let ctx = quiet_ctx(&sink);
    let pool = ThreadPool::with_workers_in(&ctx, 3).unwrap();
    let counter = Arc::new(AtomicI64::new(0));
    for _ in 0..400 {
        let counter = Arc::clone(&counter);
        pool.push(move || {
            counter.fetch_add(1, Ordering::Relaxed);
        })
        .unwrap();
    }
    pool.wait().unwrap();
    assert_eq!(
        counter.load(Ordering::Relaxed),
        400,
        "batch A incomplete at wait"
    );
    for _ in 0..400 {
        let counter = Arc::clone(&counter);
        pool.push(move || {
            counter.fetch_add(1, Ordering::Relaxed);
        })
        .unwrap();
    }
    pool.join().unwrap();
    assert_eq!(
        counter.load(Ordering::Relaxed),
        800,
        "batch B incomplete at join"
    );
    println!("criterion 5 PASS: push-wait-push-join ran both batches to completion");
}

#[test]
fn criterion_06_parallel_for_equals_the_sequential_loop() {
    let _gate = gate();
    let sink = CaptureSink::default();
    let ctx = quiet_ctx(&sink);
    let mut rng = ChaCha12Rng::seed_from_u64(0xC6);

    for case in 0..1_000 {
        let begin = rng.gen_range(-100i64..100);
        let len = rng.gen_range(0i64..400);
        let end = begin + len;
        let workers = [0usize, 1, 2, 8][rng.gen_range(0..4)];
        let batches = if rng.gen_bool(0.5) {
            None
        } else {
            Some(rng.gen_range(1..64usize))
        };
        let slots: Vec<AtomicI64> = (0..len).map(|_| AtomicI64::new(i64::MIN)).collect();
        parallel_for_in(
            &ctx,
            begin,
            end,
            |i| slots[(i - begin) as usize].store(3 * i - 7, Ordering::Relaxed),
            Some(workers),
            batches,
        )
        .unwrap();
        let got: Vec<i64> = slots.iter().map(|s| s.load(Ordering::Relaxed)).collect();
        let expected: Vec<i64> = (begin..end).map(|i| 3 * i - 7).collect();
        assert_eq!(
            got, expected,
            "case {case}: begin={begin} len={len} workers={workers} batches={batches:?}"
        );
    }

    for case in 0..10_000 {
        let begin = rng.gen_range(-10_000i64..10_000);
        let len = rng.gen_range(0i64..5_000);
        let end = begin + len;
        let k = rng.gen_range(1..256usize);
        let plan = BatchPlan::balanced(begin, end, k);
        let mut cursor = begin;
        let mut min_size = i64::MAX;
        let mut max_size = i64::MIN;
        for range in plan.ranges() {
            assert_eq!(range.start, cursor, "case {case}: gap or overlap");
            assert!(range.end >= range.start, "case {case}: negative batch");
            min_size = min_size.min(range.end - range.start);
            max_size = max_size.max(range.end - range.start);
            cursor = range.end;
        }
        assert_eq!(cursor, end.max(begin), "case {case}: not covering");
        assert!(max_size - min_size <= 1, "case {case}: unbalanced");
        assert!(plan.n_batches() >= 1 && plan.n_batches() as i64 <= len.max(1));
    }
    println!("criterion 6 PASS: 10^3 loop cases equal sequential; 10^4 plans partition cleanly");
}

#[test]
fn criterion_07_knight_agrees_with_the_quadratic_oracle() {
    let _gate = gate();
    let hand_x = [1.0, 2.0, 3.0, 4.0];
    let hand_y = [2.0, 1.0, 4.0, 3.0];
    let hand = kendall_tau_knight(&hand_x, &hand_y).unwrap();
    assert!((hand - 1.0 / 3.0).abs() < 1e-12, "hand case gave {hand}");
    assert_eq!(hand, kendall_tau_brute(&hand_x, &hand_y).unwrap());

    let mut rng = ChaCha12Rng::seed_from_u64(0xC7);
    let mut checked = 0u32;
    for case in 0..1000 {
        let n = rng.gen_range(2..=200);
        let alphabet = [2u32, 3, 5, 8, 13, 500][case % 6];
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..alphabet) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0..alphabet) as f64).collect();
        match (kendall_tau_brute(&x, &y), kendall_tau_knight(&x, &y)) {
            (Ok(brute), Ok(knight)) => {
                assert!(
                    (brute - knight).abs() < 1e-12,
                    "case {case}: {brute} vs {knight}"
                );
                checked += 1;
            }
            (Err(Error::AllTied), Err(Error::AllTied)) => {}
            (b, k) => panic!("case {case}: outcome mismatch {b:?} vs {k:?}"),
        }
    }
    assert!(checked > 900, "almost all instances should be well-defined");
    println!("criterion 7 PASS: hand case = 1/3; {checked} random tie-heavy instances agree");
}

#[test]
fn criterion_08_parallel_matrix_is_exactly_sequential() {
    let _gate = gate();
    let sink = CaptureSink::default();
    let ctx = quiet_ctx(&sink);
    let mut rng = ChaCha12Rng::seed_from_u64(0xC8);
    for d in [2usize, 10, 50] {
        let data: Arc<Vec<Vec<f64>>> = Arc::new(
            (0..d)
                .map(|_| (0..500).map(|_| rng.gen::<f64>()).collect())
                .collect(),
        );
        let expected = kendall_matrix_seq(&data).unwrap();
        for workers in [0usize, 1, 2, 8] {
            let pool = ThreadPool::with_workers_in(&ctx, workers).unwrap();
            let got = kendall_matrix(&data, &pool).unwrap();
            pool.join().unwrap();
            assert_eq!(got, expected, "d={d} workers={workers}");
        }
    }
    println!("criterion 8 PASS: matrix identical to the double loop for d in {{2,10,50}}");
}

#[test]
fn criterion_09_kde_integrates_to_nearly_one() {
    let _gate = gate();
    let mut rng = ChaCha12Rng::seed_from_u64(0xC9);
    for case in 0..100 {
        let n = rng.gen_range(10..1500);
        let shape = case % 3;
        let sample: Vec<f64> = (0..n)
            .map(|_| match shape {
                0 => rng.gen::<f64>() * 20.0 - 10.0,
                1 => {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z * 3.0 + 5.0
                }
                _ => -(rng.gen::<f64>()).ln() * 2.0,
            })
            .collect();
        let estimate = kde_gauss(&sample).unwrap();
        let integral = estimate.integral();
        assert!(
            (0.9..=1.0).contains(&integral),
            "case {case}: integral {integral}"
        );
    }

    let single = kde_gauss_with(&[0.0], 500, Some(1.0)).unwrap();
    let peak = single.density.iter().copied().fold(f64::MIN, f64::max);
    assert!(
        (peak - 0.39894).abs() < 1e-4,
        "single-point peak {peak} is not phi(0)"
    );
    println!("criterion 9 PASS: 100 integrals in [0.9, 1.0]; single-point peak = phi(0) +- 1e-4");
}

fn median(samples: &mut [f64]) -> f64 {
    samples.sort_unstable_by(f64::total_cmp);
    samples[samples.len() / 2]
}

#[test]
fn criterion_10_check_and_spawn_overheads_keep_their_ratios() {
    let _gate = gate();
    let sink = CaptureSink::default();
    let ctx = quiet_ctx(&sink);

    // Per-call cost of an interruption check, sampled as batches.
    let check_cost = |ctx: &Arc<HostContext>| {
        const CALLS: u32 = 20_000;
        let mut samples: Vec<f64> = (0..21)
            .map(|_| {
                let start = Instant::now();
                let mut fired = 0u32;
                for _ in 0..CALLS {
                    fired += u32::from(std::hint::black_box(ctx.is_interrupted()));
                }
                assert_eq!(fired, 0);
                start.elapsed().as_secs_f64() / f64::from(CALLS)
            })
            .collect();
        median(&mut samples)
    };

    let host_cost = check_cost(&ctx);
    let child_ctx = Arc::clone(&ctx);
    let child_cost = thread::spawn(move || check_cost(&child_ctx))
        .join()
        .unwrap();
    let ratio = host_cost / child_cost;
    assert!(
        ratio >= 5.0,
        "host {:.1}ns / child {:.1}ns = {ratio:.2}, below 5",
        host_cost * 1e9,
        child_cost * 1e9
    );

    // Guest threads wrap an OS thread, so spawn+join can only be dearer.
    let mut raw_samples = Vec::new();
    let mut guest_samples = Vec::new();
    for _ in 0..51 {
        let start = Instant::now();
        thread::spawn(|| {}).join().unwrap();
        raw_samples.push(start.elapsed().as_secs_f64());

        let start = Instant::now();
        GuestThread::spawn_in(&ctx, || {}).unwrap().join().unwrap();
        guest_samples.push(start.elapsed().as_secs_f64());
    }
    let raw = median(&mut raw_samples);
    let guest = median(&mut guest_samples);
    assert!(
        guest >= raw,
        "guest spawn+join {guest:.2e}s beat the raw thread {raw:.2e}s"
    );
    println!(
        "criterion 10 PASS: host/child check ratio {ratio:.1} (host {:.0}ns, child {:.1}ns); guest {:.0}us >= raw {:.0}us",
        host_cost * 1e9,
        child_cost * 1e9,
        guest * 1e6,
        raw * 1e6
    );
}

/// Physical cores from /proc/cpuinfo: unique (physical id, core id)
/// pairs. Falls back to the logical count when the fields are missing.
fn physical_cores() -> usize {
    let Ok(info) = std::fs::read_to_string("/proc/cpuinfo") else {
        return mainstay::hardware_cores();
    };
    let mut pairs = std::collections::HashSet::new();
    let (mut phys, mut core) = (None::<u64>, None::<u64>);
    for line in info.lines() {
        let mut parts = line.splitn(2, ':');
        let key = parts.next().unwrap_or("").trim();
        let value = parts.next().unwrap_or("").trim();
        match key {
            "physical id" => phys = value.parse().ok(),
            "core id" => core = value.parse().ok(),
            "" => {
                if let (Some(p), Some(c)) = (phys, core) {
                    pairs.insert((p, c));
                }
                phys = None;
                core = None;
            }
            _ => {}
        }
    }
    if let (Some(p), Some(c)) = (phys, core) {
        pairs.insert((p, c));
    }
    if pairs.is_empty() {
        mainstay::hardware_cores()
    } else {
        pairs.len()
    }
}

#[test]
fn criterion_11_kde_speedup_on_four_cores() {
    let _gate = gate();
    let cores = physical_cores();
    if cores < 4 {
        println!(
            "criterion 11 SKIP: {cores} physical core(s) < 4; the speedup target needs real parallel hardware"
        );
        return;
    }
    let started = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0xC11);
    let d = 100usize;
    let n = 10_000usize;
    let data: Arc<Vec<Vec<f64>>> = Arc::new(
        (0..d)
            .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect(),
    );

    let sequential = {
        let start = Instant::now();
        for column in data.iter() {
            std::hint::black_box(kde_gauss(column).unwrap());
        }
        start.elapsed()
    };

    let sink = CaptureSink::default();
    let ctx = quiet_ctx(&sink);
    let pool = ThreadPool::with_workers_in(&ctx, 4).unwrap();
    let parallel = {
        let start = Instant::now();
        for i in 0..d {
            let data = Arc::clone(&data);
            pool.push(move || {
                std::hint::black_box(kde_gauss(&data[i]).unwrap());
            })
            .unwrap();
        }
        pool.wait().unwrap();
        start.elapsed()
    };
    pool.join().unwrap();

    let speedup = sequential.as_secs_f64() / parallel.as_secs_f64();
    assert!(
        speedup >= 2.0,
        "4 workers over {d} densities: {speedup:.2}x (seq {sequential:?}, par {parallel:?})"
    );
    assert!(started.elapsed() < Duration::from_secs(60));
    println!("criterion 11 PASS: {speedup:.2}x speedup with 4 workers on {cores} cores");
}

#[cfg(unix)]
fn thread_cpu_time() -> Duration {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    assert_eq!(rc, 0, "clock_gettime failed");
    Duration::new(ts.tv_sec as u64, ts.tv_nsec as u32)
}

#[test]
fn criterion_12_waiting_is_idle_and_pumping_is_live() {
    let _gate = gate();

    // A five-second wait must cost the host almost no CPU.
    #[cfg(unix)]
    {
        let sink = CaptureSink::default();
        let ctx = quiet_ctx(&sink);
        let pool = ThreadPool::with_workers_in(&ctx, 1).unwrap();
        pool.push(|| thread::sleep(Duration::from_secs(5))).unwrap();
        let cpu_before = thread_cpu_time();
        pool.wait().unwrap();
        let cpu_spent = thread_cpu_time() - cpu_before;
        pool.join().unwrap();
        assert!(
            cpu_spent < Duration::from_millis(250),
            "host burned {cpu_spent:?} of CPU while waiting"
        );
        println!("criterion 12 PASS (idle half): host CPU during 5s wait = {cpu_spent:?}");
    }

    // Messages printed mid-task must surface within two pump intervals.
    let sink = CaptureSink::default();
    let ctx = quiet_ctx(&sink);
    let worker_ctx = Arc::clone(&ctx);
    let (printed_tx, printed_rx) = mpsc::channel::<Instant>();
    let mut guest = GuestThread::spawn_in(&ctx, move || {
        worker_ctx.print("beacon\n");
        printed_tx.send(Instant::now()).unwrap();
        thread::sleep(Duration::from_millis(1200));
    })
    .unwrap();

    let (seen_tx, seen_rx) = mpsc::channel::<Instant>();
    let observer_sink = sink.clone();
    let observer = thread::spawn(move || loop {
        if !observer_sink.is_empty() {
            let _ = seen_tx.send(Instant::now());
            return;
        }
        thread::sleep(Duration::from_millis(2));
    });

    let pump = guest.pump_interval();
    guest.join().unwrap();
    observer.join().unwrap();
    let printed = printed_rx.recv().unwrap();
    let seen = seen_rx.recv().unwrap();
    let latency = seen.duration_since(printed);
    assert!(
        latency <= 2 * pump,
        "message took {latency:?} to surface; pump interval is {pump:?}"
    );
    println!("criterion 12 PASS (live half): beacon surfaced after {latency:?} (pump {pump:?})");
}
