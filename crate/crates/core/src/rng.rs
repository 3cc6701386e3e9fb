//! Seeded, splittable random streams.
//!
//! Every experiment takes a mandatory master seed. Worker w draws from
//! `stream(seed, w)`; streams are decorrelated by a SplitMix64 finalizer, and
//! aggregation is commutative, so results depend only on (seed, worker count).

pub use rand_pcg::Pcg64;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent stream for (master seed, worker index).
pub fn stream(seed: u64, worker: u64) -> Pcg64 {
    use rand::SeedableRng;
    let mixed = splitmix64(seed ^ splitmix64(worker.wrapping_add(0x5151_5151_5151_5151)));
    Pcg64::seed_from_u64(mixed)
}

/// Split `total` items across `workers`, run `map` on each worker's share with its
/// own stream, and fold the per-worker outputs in worker order. Worker count 1
/// reproduces bit-exactly; other counts are statistically equivalent.
pub fn run_workers<R, F>(seed: u64, total: u64, workers: usize, map: F) -> Vec<R>
where
    R: Send,
    F: Fn(Pcg64, u64, usize) -> R + Sync,
{
    let workers = workers.max(1);
    let base = total / workers as u64;
    let extra = (total % workers as u64) as usize;
    if workers == 1 {
        return vec![map(stream(seed, 0), total, 0)];
    }
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(workers);
        for w in 0..workers {
            let share = base + if w < extra { 1 } else { 0 };
            let f = &map;
            handles.push(scope.spawn(move || f(stream(seed, w as u64), share, w)));
        }
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    })
}
