//! Seeded random streams and a scoped worker pool.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

pub type Stream = ChaCha8Rng;

/// Independent stream for `(seed, worker)`.
pub fn stream(seed: u64, worker: u64) -> Stream {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(worker);
    r
}

/// Share of `total` handled by `worker` out of `workers`.
pub fn share(total: u64, workers: usize, worker: usize) -> u64 {
    let w = workers as u64;
    total / w + u64::from((worker as u64) < total % w)
}

/// Runs `job(worker_index, stream, share)` on `workers` threads and returns
/// the per-worker results in worker order.
pub fn run_workers<T, F>(seed: u64, workers: usize, total: u64, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut Stream, u64) -> Result<T> + Sync,
{
    let workers = workers.max(1);
    if workers == 1 {
        return Ok(vec![job(0, &mut stream(seed, 0), total)?]);
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let job = &job;
                scope.spawn(move || job(w, &mut stream(seed, w as u64), share(total, workers, w)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker thread panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn shares_add_up() {
        for total in [0u64, 1, 7, 1000, 1001] {
            for workers in 1..6 {
                let s: u64 = (0..workers).map(|w| share(total, workers, w)).sum();
                assert_eq!(s, total);
            }
        }
    }

    #[test]
    fn streams_differ_and_repeat() {
        let a: u64 = stream(1, 0).random();
        let b: u64 = stream(1, 1).random();
        let c: u64 = stream(1, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn pool_is_deterministic() {
        let run = || {
            run_workers(9, 3, 10, |w, r, n| Ok((w, (0..n).map(|_| r.random::<u32>()).collect::<Vec<_>>()))).unwrap()
        };
        assert_eq!(run(), run());
    }
}
