use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exec::Execution;
use crate::parties::check_mapping;
use crate::photonics::{
    helstrom_error, mixture_density_with, truncation_dim_with_max, BitAssignment,
    DEFAULT_MAX_DIM, DEFAULT_TAIL_BOUND,
};

/// One point of a theory / Monte Carlo curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// `M`, `<n>` or `φ`, depending on the curve.
    pub abscissa: f64,
    pub theory: f64,
    pub mc: Option<f64>,
    pub stderr: Option<f64>,
    /// Samples behind `mc`; zero for pure theory points.
    pub samples: u64,
    /// Samples dropped as erasures.
    pub excluded: u64,
}

impl CurvePoint {
    pub fn theory_only(abscissa: f64, theory: f64) -> Self {
        CurvePoint {
            abscissa,
            theory,
            mc: None,
            stderr: None,
            samples: 0,
            excluded: 0,
        }
    }
}

/// `½(1 - √(1 - x))` without cancellation for small `x`.
fn half_one_minus_sqrt(x: f64) -> f64 {
    0.5 * x / (1.0 + (1.0 - x).sqrt())
}

/// Bob's error probability `½(1 - √(1 - e^{-2T<n>}))`.
pub fn pe_bob(t: f64, mean_photons: f64) -> f64 {
    half_one_minus_sqrt((-2.0 * t * mean_photons).exp())
}

/// Helstrom error for the antipodal pure pair `|±α₀⟩`:
/// `½(1 - √(1 - e^{-4|α₀|²}))`.
pub fn pe_pure_pair(alpha0_sq: f64) -> f64 {
    half_one_minus_sqrt((-4.0 * alpha0_sq).exp())
}

/// Number of bases inside one standard deviation of the angle estimate,
/// `M / (π |α|)`.
pub fn n_sigma_theory(m: u32, mean_photons: f64) -> f64 {
    m as f64 / (PI * mean_photons.sqrt())
}

/// Delta-method variance of `arctan √(n_v/n_h)`: `1/(4<n>)` in the interior,
/// zero where one detector has zero mean.
pub fn angle_variance_theory(mean_photons: f64, phi: f64) -> f64 {
    if phi == 0.0 || phi == FRAC_PI_2 {
        0.0
    } else {
        1.0 / (4.0 * mean_photons)
    }
}

/// Eve's optimal individual-attack bit error versus `M`: the Helstrom bound
/// between the key-averaged states for bit 0 and bit 1.
pub fn pe_eve_curve(alpha0_sq: f64, m_list: &[u32], exec: Execution) -> Result<Vec<CurvePoint>> {
    pe_eve_curve_with(alpha0_sq, m_list, BitAssignment::Interleaved, DEFAULT_MAX_DIM, exec)
}

pub fn pe_eve_curve_with(
    alpha0_sq: f64,
    m_list: &[u32],
    assignment: BitAssignment,
    max_dim: usize,
    exec: Execution,
) -> Result<Vec<CurvePoint>> {
    if assignment == BitAssignment::Interleaved {
        m_list.iter().try_for_each(|&m| check_mapping(m))?;
    }
    let dim = truncation_dim_with_max(alpha0_sq, DEFAULT_TAIL_BOUND, max_dim)?;
    let alpha0 = alpha0_sq.sqrt();
    exec.map_slice(m_list, |&m| {
        let rho0 = mixture_density_with(0, m, alpha0, dim, assignment)?;
        let rho1 = mixture_density_with(1, m, alpha0, dim, assignment)?;
        Ok(CurvePoint::theory_only(m as f64, helstrom_error(&rho0, &rho1)?))
    })
    .into_iter()
    .collect()
}
