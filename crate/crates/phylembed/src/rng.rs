//! Seeded RNG substreams and content hashing.
//!
//! Every source of randomness in the pipeline is a named substream of one
//! root seed, so that components can be re-run or parallelized without
//! perturbing each other's draws.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Deterministic RNG used throughout the crate.
pub type Stream = ChaCha12Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over arbitrary bytes. Used for substream derivation and for the
/// content hashes recorded in run manifests and embedding sidecars.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// RNG for the named substream of `root`.
pub fn substream(root: u64, name: &str) -> Stream {
    substream_indexed(root, name, 0)
}

/// RNG for the `index`-th member of a named substream family, e.g. one
/// stream per walk or per run.
pub fn substream_indexed(root: u64, name: &str, index: u64) -> Stream {
    let mut state = root ^ fnv1a64(name.as_bytes()) ^ index.wrapping_mul(0xa076_1d64_78bd_642f);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    Stream::from_seed(seed)
}

/// Derived seed for handing a whole component its own root.
pub fn derive_seed(root: u64, name: &str, index: u64) -> u64 {
    let mut state = root ^ fnv1a64(name.as_bytes()) ^ index.wrapping_mul(0xa076_1d64_78bd_642f);
    splitmix64(&mut state)
}
