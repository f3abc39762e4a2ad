//! Reproducible random streams.
//!
//! Every random quantity in a campaign comes from a stream identified by
//! `(master_seed, n, replication, purpose)`. The identifier is folded into a
//! single 64-bit seed with the SplitMix64 finalizer:
//!
//! ```text
//! h = mix(master ^ purpose)
//! h = mix(h ^ n)
//! h = mix(h ^ replication)
//! ```
//!
//! where `mix` is SplitMix64's `z += 0x9E3779B97F4A7C15` followed by the two
//! xor-shift-multiply rounds. The resulting seed initializes a `ChaCha8Rng`,
//! so streams are independent of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for; part of the stream identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    RateProfile = 0x01,
    SamplePlan = 0x02,
    Simulation = 0x03,
    Sde = 0x04,
    Concentration = 0x05,
    Audit = 0x06,
}

#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, n: u64, rep: u64, purpose: Purpose) -> u64 {
    let h = splitmix64(master ^ purpose as u64);
    let h = splitmix64(h ^ n);
    splitmix64(h ^ rep)
}

/// Master seed of one policy's campaign, so that policies compared on the
/// same scenario draw independent streams.
pub fn policy_master(master: u64, policy_code: u8) -> u64 {
    splitmix64(master ^ ((policy_code as u64 + 1) << 56))
}

pub fn stream(master: u64, n: u64, rep: u64, purpose: Purpose) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, n, rep, purpose))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference SplitMix64 generator seeded with 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(
            splitmix64(0x9E37_79B9_7F4A_7C15),
            0x6E78_9E6A_A1B9_65F4
        );
    }

    #[test]
    fn streams_differ_by_every_component() {
        let base = derive_seed(7, 100, 0, Purpose::Simulation);
        assert_ne!(base, derive_seed(8, 100, 0, Purpose::Simulation));
        assert_ne!(base, derive_seed(7, 101, 0, Purpose::Simulation));
        assert_ne!(base, derive_seed(7, 100, 1, Purpose::Simulation));
        assert_ne!(base, derive_seed(7, 100, 0, Purpose::SamplePlan));
    }

    #[test]
    fn stream_is_reproducible() {
        let a: Vec<u64> = stream(1, 2, 3, Purpose::Sde).random_iter().take(4).collect();
        let b: Vec<u64> = stream(1, 2, 3, Purpose::Sde).random_iter().take(4).collect();
        assert_eq!(a, b);
    }
}
