//! Named random sub-streams derived from a master seed.
//!
//! Every random quantity in a run is drawn from a generator seeded by
//! `derive(master, &[stream, index, ...])`, so results do not depend on the
//! order in which parallel work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tags. Values are arbitrary but must stay stable across releases.
pub mod stream {
    pub const VEL_NOISE: u64 = 0x7665_6c6e;
    pub const TORQUE_NOISE: u64 = 0x7471_6e73;
    pub const PERTURBATION: u64 = 0x7065_7274;
    pub const SWEEP_MODEL: u64 = 0x6d6f_646c;
    pub const SWEEP_VEL_NOISE: u64 = 0x7377_766e;
    pub const SWEEP_TORQUE_NOISE: u64 = 0x7377_746e;
    pub const SWEEP_RESPONSE: u64 = 0x7377_7273;
    pub const SWEEP_DELAY: u64 = 0x7377_646c;
    pub const SWEEP_PERTURBATION: u64 = 0x7377_7074;
    pub const EVAL_TRIAL: u64 = 0x7472_6961;
    pub const PARTICLE: u64 = 0x7061_7274;
    pub const SNES: u64 = 0x736e_6573;
    pub const DE: u64 = 0x6465_6576;
    pub const SYSID_RUN: u64 = 0x7379_7364;
    pub const POLICY_INIT: u64 = 0x706f_6c69;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with a path of tags into a new 64-bit seed.
pub fn derive(master: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix64(master), |acc, &t| {
        splitmix64(acc ^ splitmix64(t))
    })
}

pub fn rng(master: u64, tags: &[u64]) -> Rng {
    Rng::seed_from_u64(derive(master, tags))
}
