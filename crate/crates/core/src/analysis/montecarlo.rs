use std::f64::consts::PI;
use std::ops::RangeInclusive;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::stats::Moments;
use super::theory::{angle_variance_theory, n_sigma_theory, CurvePoint};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::keystream::check_alphabet;
use crate::parties::{eve_estimate_angle, eve_nearest_point};
use crate::photonics::{CoherentAmplitude, DetectionRecord};
use crate::rng::{substream, Domain};

/// Points `0..=M/2`: the quarter turn of physical angle an H/V analyzer at 0
/// resolves without fold collisions.
pub fn quarter_window(m: u32) -> RangeInclusive<u32> {
    0..=m / 2
}

fn check_window(m: u32, window: &RangeInclusive<u32>) -> Result<()> {
    if window.is_empty() || 2 * window.end() > m {
        return Err(Error::param(format!(
            "window {}..={} is not a fold-free subset of 0..={}",
            window.start(),
            window.end(),
            m / 2
        )));
    }
    Ok(())
}

/// Eve's angle-reconstruction spread expressed as `N_σ`.
///
/// Trial `i` sends point `i mod (M/2 + 1)` of the quarter window (every
/// basis in turn), measures it once on a fixed analyzer and reconstructs the
/// angle. The measured value is `2·std(φ̂ - φ) / (π/M)`.
pub fn n_sigma_mc(
    m: u32,
    mean_photons: f64,
    trials: u64,
    master_seed: u64,
    exec: Execution,
) -> Result<CurvePoint> {
    check_alphabet(m)?;
    if trials < 1000 {
        return Err(Error::param(format!("trials = {trials} below the minimum 1000")));
    }
    let amp = CoherentAmplitude::from_mean_photons(mean_photons)?;
    let span = (m / 2 + 1) as u64;
    let errors: Vec<Option<f64>> = exec.map(trials, |i| {
        let phi = PI * (i % span) as f64 / m as f64;
        let mut rng = substream(master_seed, Domain::Trial, i);
        let rec = DetectionRecord::measure(phi, 0.0, &amp, i, &mut rng);
        eve_estimate_angle(&rec).map(|phi_hat| phi_hat - phi)
    });
    let kept: Vec<f64> = errors.iter().flatten().copied().collect();
    let mom = Moments::of(&kept);
    let spacing = PI / m as f64;
    Ok(CurvePoint {
        abscissa: mean_photons,
        theory: n_sigma_theory(m, mean_photons),
        mc: Some(2.0 * mom.std() / spacing),
        stderr: Some(2.0 * mom.std_stderr() / spacing),
        samples: mom.n,
        excluded: trials - mom.n,
    })
}

/// Variance of `arctan √(n_v/n_h)` at each analyzer-relative angle of
/// `phi_grid`. Double-zero counts are erasures: excluded and tallied.
pub fn angle_variance_curve(
    mean_photons: f64,
    phi_grid: &[f64],
    trials: u64,
    master_seed: u64,
    exec: Execution,
) -> Result<Vec<CurvePoint>> {
    if trials < 10_000 {
        return Err(Error::param(format!("trials = {trials} below the minimum 10000")));
    }
    if let Some(bad) = phi_grid.iter().find(|p| !(0.0..=PI / 2.0).contains(*p)) {
        return Err(Error::param(format!("grid angle {bad} outside [0, π/2]")));
    }
    let amp = CoherentAmplitude::from_mean_photons(mean_photons)?;
    let n_phi = phi_grid.len() as u64;
    let estimates: Vec<Option<f64>> = exec.map(n_phi * trials, |i| {
        let phi = phi_grid[(i / trials) as usize];
        let mut rng = substream(master_seed, Domain::Trial, i);
        eve_estimate_angle(&DetectionRecord::measure(phi, 0.0, &amp, i, &mut rng))
    });
    Ok(phi_grid
        .iter()
        .zip(estimates.chunks(trials as usize))
        .map(|(&phi, chunk)| {
            let kept: Vec<f64> = chunk.iter().flatten().copied().collect();
            let mom = Moments::of(&kept);
            CurvePoint {
                abscissa: phi,
                theory: angle_variance_theory(mean_photons, phi),
                mc: Some(mom.variance),
                stderr: Some(mom.variance_stderr()),
                samples: mom.n,
                excluded: trials - mom.n,
            }
        })
        .collect())
}

/// Opaque-attack basis sequence: Alice's point and Eve's single-shot estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpaqueSequence {
    pub pairs: Vec<(u32, u32)>,
    pub mean_abs_error: f64,
    pub error_std: f64,
    pub erasures: u64,
}

/// Alice picks a uniform point of `window` per symbol; Eve measures once on
/// a fixed analyzer and snaps her angle estimate into the same window. On a
/// double-zero count she guesses uniformly in the window.
pub fn opaque_sequence(
    m: u32,
    mean_photons: f64,
    window: RangeInclusive<u32>,
    n_symbols: u64,
    master_seed: u64,
    exec: Execution,
) -> Result<OpaqueSequence> {
    check_alphabet(m)?;
    check_window(m, &window)?;
    let amp = CoherentAmplitude::from_mean_photons(mean_photons)?;
    let rows: Vec<Result<(u32, u32, bool)>> = exec.map(n_symbols, |i| {
        let mut rng = substream(master_seed, Domain::Trial, i);
        let alice = rng.random_range(window.clone());
        let rec = DetectionRecord::measure(PI * alice as f64 / m as f64, 0.0, &amp, i, &mut rng);
        match eve_estimate_angle(&rec) {
            Some(phi) => Ok((alice, eve_nearest_point(phi, m, window.clone())?, false)),
            None => Ok((alice, rng.random_range(window.clone()), true)),
        }
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = rows.iter().map(|&(a, e, _)| e as f64 - a as f64).collect();
    let mom = Moments::of(&errors);
    let mean_abs_error = if errors.is_empty() {
        0.0
    } else {
        errors.iter().map(|e| e.abs()).sum::<f64>() / errors.len() as f64
    };
    Ok(OpaqueSequence {
        pairs: rows.iter().map(|&(a, e, _)| (a, e)).collect(),
        mean_abs_error,
        error_std: mom.std(),
        erasures: rows.iter().filter(|r| r.2).count() as u64,
    })
}
