//! Deterministic seed derivation. Every random choice in the crate draws
//! from a ChaCha8 stream seeded through these helpers, so results do not
//! depend on scheduling order.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combine a seed with one more value.
pub fn mix(seed: u64, value: u64) -> u64 {
    splitmix(splitmix(seed) ^ value.wrapping_mul(GOLDEN))
}

/// Combine a seed with a text tag (FNV-1a folded through [`mix`]).
pub fn mix_str(seed: u64, tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    mix(seed, h)
}

/// Seed of one `(protocol, depth, circuit index)` cell.
pub fn cell_seed(seed: u64, protocol: &str, depth: usize, index: usize) -> u64 {
    mix(mix(mix_str(seed, protocol), depth as u64), index as u64)
}
