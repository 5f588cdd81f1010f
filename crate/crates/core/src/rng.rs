use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::text::fnv1a64;

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for a stream keyed by `(master, label)`; independent of call order.
pub(crate) fn derive_seed(master: u64, label: &str) -> u64 {
    mix(master ^ mix(fnv1a64(label.as_bytes())))
}

pub(crate) fn stream(master: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, label))
}
