//! Alice's encoder, Bob's keyed decoder and Eve's attacks.
//!
//! Bit `b` under basis `r` is sent on point `p = r + (b ⊕ (r mod 2))·M/2`.
//! With `M ≡ 2 (mod 4)` this gives `bit(p) = p mod 2`, so neighbouring points
//! on the circle always carry opposite bits while each basis `{r, r + M/2}`
//! still carries both values.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::keystream::{check_alphabet, expand_with, SeedKey};
use crate::photonics::{detection_means, ln_poisson_pmf, CoherentAmplitude, DetectionRecord, PolarizationPoint};
use crate::rng;

/// Largest seed key the exhaustive known-plaintext search accepts.
pub const KPA_MAX_KEY_BITS: u32 = 24;

/// Rejects alphabets the bit mapping cannot serve.
pub fn check_mapping(m: u32) -> Result<()> {
    if m % 4 != 2 {
        return Err(Error::param(format!(
            "M = {m} violates M ≡ 2 (mod 4), required by the bit-to-point mapping"
        )));
    }
    Ok(())
}

/// Point index for `bit` under basis `r`, for any even `m`.
#[inline]
pub(crate) fn map_point(bit: u8, r: u32, m: u32) -> u32 {
    r + ((bit as u32) ^ (r & 1)) * (m / 2)
}

/// Inverse of the mapping: `(bit, basis)` for point `p`.
pub fn decode_point(p: u32, m: u32) -> (u8, u32) {
    let half = m / 2;
    let r = p % half;
    let upper = (p >= half) as u32;
    ((upper ^ (r & 1)) as u8, r)
}

/// Analyzer orientation that aligns basis `r` with the H/V detectors.
pub fn basis_axis(r: u32, m: u32) -> f64 {
    PI * r as f64 / m as f64
}

/// One symbol of the plan: bit, running-key basis and transmitted point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolPlan {
    pub bit: u8,
    pub basis: u32,
    pub point: u32,
}

pub fn encode_point(bit: u8, r: u32, m: u32) -> Result<PolarizationPoint> {
    Ok(PolarizationPoint::new(plan_symbol(bit, r, m)?.point, m).expect("point < m"))
}

pub fn plan_symbol(bit: u8, r: u32, m: u32) -> Result<SymbolPlan> {
    check_mapping(m)?;
    if bit > 1 {
        return Err(Error::param(format!("bit {bit} is not 0 or 1")));
    }
    if r >= m / 2 {
        return Err(Error::param(format!("basis {r} outside [0, {})", m / 2)));
    }
    Ok(SymbolPlan {
        bit,
        basis: r,
        point: map_point(bit, r, m),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BobDecision {
    pub bit_estimate: u8,
    pub erasure: bool,
    /// `n_v - n_h` in the basis-aligned frame.
    pub vh_difference: i64,
}

/// Bob's decision for a detection taken with the analyzer at basis `r`.
///
/// The brighter detector picks the point (`r` on H, `r + M/2` on V). Ties are
/// erasures resolved by the per-symbol coin of `tie_seed`.
pub fn bob_decide(rec: &DetectionRecord, r: u32, m: u32, tie_seed: u64) -> BobDecision {
    let erasure = rec.n_h == rec.n_v;
    let bit_estimate = if erasure {
        rng::coin(tie_seed, rec.symbol_index)
    } else {
        let point = if rec.n_h > rec.n_v { r } else { r + m / 2 };
        decode_point(point, m).0
    };
    BobDecision {
        bit_estimate,
        erasure,
        vh_difference: rec.vh_difference(),
    }
}

/// `arctan √(n_v / n_h)`, or `None` when both counts are zero.
pub fn eve_estimate_angle(rec: &DetectionRecord) -> Option<f64> {
    match (rec.n_h, rec.n_v) {
        (0, 0) => None,
        (0, _) => Some(FRAC_PI_2),
        (h, v) => Some((v as f64 / h as f64).sqrt().atan()),
    }
}

/// Reflects a physical angle into `[0, π/2]`, the range an H/V intensity
/// measurement can distinguish.
pub fn fold_angle(x: f64) -> f64 {
    let x = x.rem_euclid(PI);
    if x > FRAC_PI_2 {
        PI - x
    } else {
        x
    }
}

/// Point in `window` whose folded angle is nearest `phi_hat`; ties go to the
/// lower index.
pub fn eve_nearest_point(phi_hat: f64, m: u32, window: RangeInclusive<u32>) -> Result<u32> {
    let (lo, hi) = (*window.start(), *window.end());
    if lo > hi || hi >= m {
        return Err(Error::param(format!(
            "candidate window {lo}..={hi} is not a nonempty subset of [0, {m})"
        )));
    }
    if 2 * hi <= m {
        // Inside [0, π/2] the fold is the identity and the grid is uniform.
        let x = phi_hat * m as f64 / PI;
        let k = (x - 0.5).ceil().clamp(lo as f64, hi as f64);
        return Ok(k as u32);
    }
    let mut best = lo;
    let mut best_err = f64::INFINITY;
    for p in window {
        let err = (fold_angle(PI * p as f64 / m as f64) - phi_hat).abs();
        if err < best_err {
            best = p;
            best_err = err;
        }
    }
    Ok(best)
}

/// Bit implied by a point estimate (`p mod 2`); erasures take `coin`.
pub fn eve_bit_guess(point_estimate: Option<u32>, coin: u8) -> u8 {
    match point_estimate {
        Some(p) => (p % 2) as u8,
        None => coin,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EveEstimate {
    pub phi_hat: Option<f64>,
    pub point_estimate: Option<u32>,
    pub bit_guess: u8,
}

/// Eve's unkeyed per-symbol decision: reconstruct the angle from one
/// measurement, snap it to the nearest point in `window`, read off the bit.
pub fn eve_opaque(
    rec: &DetectionRecord,
    m: u32,
    window: RangeInclusive<u32>,
    tie_seed: u64,
) -> Result<EveEstimate> {
    let phi_hat = eve_estimate_angle(rec);
    let point_estimate = match phi_hat {
        Some(phi) => Some(eve_nearest_point(phi, m, window)?),
        None => None,
    };
    let bit_guess = eve_bit_guess(point_estimate, rng::coin(tie_seed, rec.symbol_index));
    Ok(EveEstimate {
        phi_hat,
        point_estimate,
        bit_guess,
    })
}

/// One scored seed from the known-plaintext search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpaCandidate {
    pub seed: u64,
    pub log_likelihood: f64,
}

/// Exhaustive known-plaintext search over every nonzero seed with the length
/// and taps of `template`.
///
/// Each candidate seed is expanded to a running key, the known bits are mapped
/// to points, and the Poisson log-likelihood of Eve's recorded counts under
/// those points is summed. The result is sorted by descending likelihood, then
/// ascending seed.
pub fn kpa_search(
    known_bits: &[u8],
    detections: &[DetectionRecord],
    template: &SeedKey,
    m: u32,
    amp: &CoherentAmplitude,
    exec: Execution,
) -> Result<Vec<KpaCandidate>> {
    check_alphabet(m)?;
    if template.len() > KPA_MAX_KEY_BITS {
        return Err(Error::Capacity(format!(
            "exhaustive search over {}-bit seeds exceeds the {KPA_MAX_KEY_BITS}-bit limit",
            template.len()
        )));
    }
    if known_bits.len() != detections.len() {
        return Err(Error::param(format!(
            "{} known bits but {} detections",
            known_bits.len(),
            detections.len()
        )));
    }
    if known_bits.iter().any(|&b| b > 1) {
        return Err(Error::param("known bits must be 0 or 1"));
    }

    // Log-likelihood of each symbol's counts under every possible point.
    let table: Vec<Vec<f64>> = detections
        .iter()
        .map(|rec| {
            (0..m)
                .map(|p| {
                    let phi = PI * p as f64 / m as f64;
                    let (mh, mv) = detection_means(phi, rec.axis_angle, amp);
                    ln_poisson_pmf(rec.n_h, mh) + ln_poisson_pmf(rec.n_v, mv)
                })
                .collect()
        })
        .collect();

    let n = known_bits.len();
    let seeds = (1u64 << template.len()) - 1;
    let mut scored = exec.map(seeds, |i| {
        let seed = i + 1;
        let mut lfsr = template.with_value(seed).expect("nonzero seed").lfsr();
        let bases = expand_with(&mut lfsr, m, n);
        let ll = bases
            .iter()
            .zip(known_bits)
            .zip(&table)
            .map(|((&r, &b), row)| row[map_point(b, r, m) as usize])
            .sum::<f64>();
        KpaCandidate {
            seed,
            log_likelihood: ll,
        }
    });
    scored.sort_by(|a, b| {
        b.log_likelihood
            .total_cmp(&a.log_likelihood)
            .then(a.seed.cmp(&b.seed))
    });
    Ok(scored)
}

/// 1-based rank of `seed` in a sorted candidate list.
pub fn kpa_rank(ranked: &[KpaCandidate], seed: u64) -> Option<usize> {
    ranked.iter().position(|c| c.seed == seed).map(|i| i + 1)
}

/// Number of other seeds scoring at least as well as `seed`.
pub fn kpa_rivals(ranked: &[KpaCandidate], seed: u64) -> Option<usize> {
    let target = ranked.iter().find(|c| c.seed == seed)?.log_likelihood;
    Some(
        ranked
            .iter()
            .filter(|c| c.seed != seed && c.log_likelihood >= target)
            .count(),
    )
}
