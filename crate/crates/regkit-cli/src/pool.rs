//! Small fixed worker pool for sweep cells. Jobs are indexed; results
//! come back in job order regardless of completion order, so output is
//! deterministic for any thread count.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Worker count: `REGKIT_THREADS` when set (min 1), else the available
/// parallelism.
pub fn thread_count() -> usize {
    if let Ok(raw) = std::env::var("REGKIT_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
        eprintln!("warning: ignoring invalid REGKIT_THREADS value {raw:?}");
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Runs `jobs` closures over a pool of `threads` workers and collects
/// the results in index order.
pub fn run_indexed<T, F>(jobs: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if jobs == 0 {
        return Vec::new();
    }
    let results: Mutex<Vec<Option<T>>> = Mutex::new((0..jobs).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = threads.clamp(1, jobs);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= jobs {
                    break;
                }
                let out = f(index);
                results.lock().expect("worker poisoned the results")[index] = Some(out);
            });
        }
    });
    results
        .into_inner()
        .expect("worker poisoned the results")
        .into_iter()
        .map(|slot| slot.expect("job skipped"))
        .collect()
}
