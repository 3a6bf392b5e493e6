use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Replicates sharing one substream. Fixed, so results do not depend on the
/// worker count.
pub const BLOCK: u64 = 256;

/// Generator for `(master, replicate, purpose)`, seeded from SHA-256 of the triple.
pub fn seed_substream(master: u64, replicate: u64, purpose: &str) -> StreamRng {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(replicate.to_le_bytes());
    h.update((purpose.len() as u64).to_le_bytes());
    h.update(purpose.as_bytes());
    let digest: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(digest)
}

/// Runs `f` for replicates `0..count` in parallel and returns the results in
/// replicate order.
///
/// Replicates are grouped into blocks of [`BLOCK`]; block `b` draws from
/// `seed_substream(master, b, purpose)`.
pub fn replicate_map<T, F>(master: u64, purpose: &str, count: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut StreamRng) -> T + Sync,
{
    let blocks = count.div_ceil(BLOCK);
    let per_block: Vec<Vec<T>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed_substream(master, b, purpose);
            let end = ((b + 1) * BLOCK).min(count);
            (b * BLOCK..end).map(|i| f(i, &mut rng)).collect()
        })
        .collect();
    per_block.into_iter().flatten().collect()
}

/// Like [`replicate_map`] for fallible replicates; the first error in
/// replicate order wins.
pub fn try_replicate_map<T, E, F>(master: u64, purpose: &str, count: u64, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(u64, &mut StreamRng) -> Result<T, E> + Sync,
{
    replicate_map(master, purpose, count, f).into_iter().collect()
}
