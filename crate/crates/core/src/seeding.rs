//! Stable seed derivation so that parallel work never depends on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// 64-bit FNV-1a; stable across platforms and toolchains.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Stream identifier for a parameter point.
pub fn stream_for_point(r: f64, t: f64) -> u64 {
    splitmix64(r.to_bits() ^ splitmix64(t.to_bits()))
}

/// Stream identifier for a labelled task.
pub fn stream_for_label(label: &str) -> u64 {
    splitmix64(fnv1a(label.as_bytes()))
}

/// Counter-based generator on `(seed, stream)`.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    g.set_stream(stream);
    g
}
