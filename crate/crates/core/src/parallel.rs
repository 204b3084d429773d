//! Worker-count resolution shared by the parallel kernels.

use rayon::ThreadPool;

pub const THREADS_ENV: &str = "RSAPROBE_THREADS";

/// Resolves the worker count: an explicit request wins, then `RSAPROBE_THREADS`,
/// and `0`/unset means every available core.
pub fn resolve_threads(requested: Option<usize>) -> usize {
    let from_env = || {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
    };
    match requested.or_else(from_env) {
        Some(n) if n > 0 => n,
        _ => std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1),
    }
}

pub fn pool(requested: Option<usize>) -> ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_threads(requested))
        .build()
        .expect("failed to build worker pool")
}
