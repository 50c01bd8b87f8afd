/// SplitMix64 finalizer. Used to derive independent per-trial and
/// per-iteration seeds from a master seed.
pub(crate) fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `(a, b)` under `master`.
pub(crate) fn derive(master: u64, a: u64, b: u64) -> u64 {
    mix(mix(mix(master) ^ a) ^ b.rotate_left(32))
}

/// Uniform value in `[-1, 1]` determined by `(seed, a, b)`.
pub(crate) fn signed_unit(seed: u64, a: u64, b: u64) -> f64 {
    let bits = derive(seed, a, b) >> 11;
    2.0 * (bits as f64 / (1u64 << 53) as f64) - 1.0
}
