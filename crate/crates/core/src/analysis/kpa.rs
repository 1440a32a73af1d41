use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exec::Execution;
use crate::keystream::{expand_running_key, SeedKey};
use crate::parties::{kpa_rank, kpa_rivals, kpa_search, map_point, KpaCandidate};
use crate::photonics::{CoherentAmplitude, DetectionRecord};
use crate::rng::{random_bits, substream, Domain};

/// One known-plaintext attack: Alice sends `n_known` bits Eve knows, Eve
/// records them on a fixed H/V analyzer and searches the whole seed space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpaTrial {
    pub true_seed: u64,
    pub n_known: usize,
    pub mean_photons: f64,
    /// 1-based position of the true seed after sorting.
    pub rank: usize,
    /// Other seeds scoring at least as well as the true one.
    pub rivals: usize,
    /// Seeds scoring strictly better than the true one. Seeds that differ
    /// only by a rejected prefix of the keystream expand to the same running
    /// key and tie exactly, so this is the attack-relevant rank minus one.
    pub outscored_by: usize,
    pub candidates: usize,
    pub top: Vec<KpaCandidate>,
}

pub fn kpa_trial(
    key: &SeedKey,
    m: u32,
    amp: &CoherentAmplitude,
    n_known: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<KpaTrial> {
    let bits = random_bits(master_seed, n_known);
    let running = expand_running_key(key, m, n_known)?;
    let detections: Vec<DetectionRecord> = bits
        .iter()
        .zip(running.bases())
        .enumerate()
        .map(|(i, (&b, &r))| {
            let phi = PI * map_point(b, r, m) as f64 / m as f64;
            let mut rng = substream(master_seed, Domain::EveDetect, i as u64);
            DetectionRecord::measure(phi, 0.0, amp, i as u64, &mut rng)
        })
        .collect();
    let ranked = kpa_search(&bits, &detections, key, m, amp, exec)?;
    let rank = kpa_rank(&ranked, key.value()).expect("true seed is a candidate");
    let rivals = kpa_rivals(&ranked, key.value()).expect("true seed is a candidate");
    let target = ranked[rank - 1].log_likelihood;
    let outscored_by = ranked.iter().take_while(|c| c.log_likelihood > target).count();
    Ok(KpaTrial {
        true_seed: key.value(),
        n_known,
        mean_photons: amp.received_photons(),
        rank,
        rivals,
        outscored_by,
        candidates: ranked.len(),
        top: ranked.into_iter().take(10).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bright_light_recovers_small_key() {
        let key = SeedKey::with_default_taps(0x5a, 8).unwrap();
        let amp = CoherentAmplitude::from_mean_photons(1e6).unwrap();
        let t = kpa_trial(&key, 50, &amp, 30, 9, Execution::Sequential).unwrap();
        assert_eq!(t.candidates, 255);
        assert_eq!(t.outscored_by, 0);
        assert!(t.rank <= 1 + t.rivals);
        assert_eq!(t.top[0].log_likelihood, t.top[t.rank - 1].log_likelihood);
    }
}
