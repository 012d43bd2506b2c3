//! Reproducible per-worker random streams.
//!
//! Worker `k` of a run seeded with `seed` draws from ChaCha8 keyed by
//! `seed` (expanded with `SeedableRng::seed_from_u64`) on stream `k`.
//! ChaCha's 64-bit stream id splits one key into independent counters, so
//! results depend only on `(seed, workers)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn worker_rng(seed: u64, worker: usize) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(worker as u64);
    rng
}

/// Number of tasks assigned to `worker` when `total` is split over `workers`.
pub fn share(total: u64, workers: usize, worker: usize) -> u64 {
    let w = workers as u64;
    total / w + u64::from((worker as u64) < total % w)
}
