//! Reproducible RNG substreams.
//!
//! A run is identified by one master seed. Each independent unit of work
//! (a trial, a symbol, a tie-breaking coin) draws from its own ChaCha stream,
//! selected by a domain tag and an index, so results are identical under any
//! schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Separates the substreams used by different stages of one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Bits = 0x6269_7473,
    BobDetect = 0x626f_6264,
    EveDetect = 0x6576_6564,
    TieCoin = 0x7469_6563,
    Trial = 0x7472_6961,
    Wire = 0x7769_7265,
}

fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for unit `index` of `domain` under `master_seed`.
pub fn substream(master_seed: u64, domain: Domain, index: u64) -> SimRng {
    let key = mix(master_seed ^ mix(domain as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// Deterministic fair coin for symbol `index`; used to resolve erasures.
pub fn coin(master_seed: u64, index: u64) -> u8 {
    substream(master_seed, Domain::TieCoin, index).random::<bool>() as u8
}

/// `n` uniformly random bits drawn from the [`Domain::Bits`] stream.
pub fn random_bits(master_seed: u64, n: usize) -> Vec<u8> {
    let mut rng = substream(master_seed, Domain::Bits, 0);
    (0..n).map(|_| rng.random::<bool>() as u8).collect()
}
