//! Small shared helpers: seed derivation and angle arithmetic.

use std::f64::consts::PI;

/// splitmix64 finalizer; good avalanche for deriving independent seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and a stream tag.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    splitmix64(base.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(tag))
}

/// Derives a seed from a base seed and a string key (used for per-key
/// dictionaries that must not depend on sampling order).
pub fn derive_seed_str(base: u64, key: &str) -> u64 {
    let mut h = splitmix64(base);
    for b in key.as_bytes() {
        h = splitmix64(h ^ u64::from(*b));
    }
    h
}

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Wraps an angle to [0, 2*pi).
pub fn wrap_angle_positive(a: f64) -> f64 {
    a.rem_euclid(2.0 * PI)
}
