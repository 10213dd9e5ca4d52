//! Counter-based randomness. Every random quantity is a pure function of
//! `(seed, domain, key)`, so results never depend on evaluation order or
//! thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DOMAIN_LABELS: u64 = 1;
pub const DOMAIN_PERCOLATION: u64 = 2;
pub const DOMAIN_SUBTREE: u64 = 3;
pub const DOMAIN_POINTS: u64 = 4;

/// Independent ChaCha8 stream for `(seed, domain)` with stream id `key`.
pub fn keyed_rng(seed: u64, domain: u64, key: u64) -> ChaCha8Rng {
    let mut material = [0u8; 32];
    material[..8].copy_from_slice(&seed.to_le_bytes());
    material[8..16].copy_from_slice(&domain.to_le_bytes());
    material[16..24].copy_from_slice(b"kakeya\0\0");
    let mut rng = ChaCha8Rng::from_seed(material);
    rng.set_stream(key);
    rng
}

/// Reads one fair bit at word position `word` of the `(seed, domain, key)`
/// stream without generating the preceding words.
pub fn bit_at(seed: u64, domain: u64, key: u64, word: u64) -> bool {
    use rand::RngCore;
    let mut rng = keyed_rng(seed, domain, key);
    rng.set_word_pos(word as u128);
    rng.next_u32() & 1 == 1
}
