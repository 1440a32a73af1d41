use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geometry::CoherentAmplitude;
use super::poisson::Poisson;
use crate::error::Result;

/// Photon counts from one two-detector measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub n_h: u64,
    pub n_v: u64,
    /// Analyzer (PBS) orientation in radians.
    pub axis_angle: f64,
    pub symbol_index: u64,
}

impl DetectionRecord {
    /// `n_v - n_h`.
    pub fn vh_difference(&self) -> i64 {
        self.n_v as i64 - self.n_h as i64
    }

    pub fn total(&self) -> u64 {
        self.n_h + self.n_v
    }

    /// Draws counts for a state at physical angle `phi` through an analyzer
    /// at `axis`.
    pub fn measure<R: Rng + ?Sized>(
        phi: f64,
        axis: f64,
        amp: &CoherentAmplitude,
        symbol_index: u64,
        rng: &mut R,
    ) -> Self {
        let means = detection_means(phi, axis, amp);
        let (n_h, n_v) = sample_detection(means, rng).expect("means are nonnegative");
        DetectionRecord {
            n_h,
            n_v,
            axis_angle: axis,
            symbol_index,
        }
    }
}

/// Mean counts at the H and V detectors for a state at physical angle `phi`
/// analyzed at `axis`: Malus's law on the received power plus dark counts.
pub fn detection_means(phi: f64, axis: f64, amp: &CoherentAmplitude) -> (f64, f64) {
    let n = amp.received_photons();
    let (s, c) = (phi - axis).sin_cos();
    (n * c * c + amp.dark_rate(), n * s * s + amp.dark_rate())
}

/// Independent Poisson draws for the two detectors.
pub fn sample_detection<R: Rng + ?Sized>(means: (f64, f64), rng: &mut R) -> Result<(u64, u64)> {
    let h = Poisson::new(means.0)?;
    let v = Poisson::new(means.1)?;
    let n_h = h.sample(rng);
    let n_v = v.sample(rng);
    Ok((n_h, n_v))
}
