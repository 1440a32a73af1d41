use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keystream::check_alphabet;

/// One of the `M` constellation points on the Poincaré great circle.
///
/// Point `p` sits at circle angle `Θ = 2πp/M`; the physical orientation of
/// its polarization ellipse is half of that, `φ = πp/M`. Antipodal points
/// `p` and `p + M/2` are orthogonal polarizations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolarizationPoint {
    index: u32,
    m: u32,
}

impl PolarizationPoint {
    pub fn new(index: u32, m: u32) -> Result<Self> {
        check_alphabet(m)?;
        if index >= m {
            return Err(Error::param(format!("point index {index} outside [0, {m})")));
        }
        Ok(PolarizationPoint { index, m })
    }

    pub fn index(self) -> u32 {
        self.index
    }

    pub fn m(self) -> u32 {
        self.m
    }

    pub fn circle_angle(self) -> f64 {
        2.0 * PI * self.index as f64 / self.m as f64
    }

    pub fn physical_angle(self) -> f64 {
        PI * self.index as f64 / self.m as f64
    }

    pub fn antipode(self) -> Self {
        PolarizationPoint {
            index: (self.index + self.m / 2) % self.m,
            m: self.m,
        }
    }
}

/// Coherent-state signal level together with the channel and detector
/// parameters that scale it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentAmplitude {
    alpha0: f64,
    transmissivity: f64,
    dark_rate: f64,
}

impl CoherentAmplitude {
    pub fn new(alpha0: f64, transmissivity: f64, dark_rate: f64) -> Result<Self> {
        if !(alpha0.is_finite() && alpha0 >= 0.0) {
            return Err(Error::param(format!("alpha0 = {alpha0} must be finite and >= 0")));
        }
        if !(0.0..=1.0).contains(&transmissivity) {
            return Err(Error::param(format!(
                "transmissivity T = {transmissivity} outside [0, 1]"
            )));
        }
        if !(dark_rate.is_finite() && dark_rate >= 0.0) {
            return Err(Error::param(format!("dark rate {dark_rate} must be >= 0")));
        }
        Ok(CoherentAmplitude {
            alpha0,
            transmissivity,
            dark_rate,
        })
    }

    /// Lossless channel, no dark counts.
    pub fn from_mean_photons(mean_photons: f64) -> Result<Self> {
        if !(mean_photons.is_finite() && mean_photons >= 0.0) {
            return Err(Error::param(format!("<n> = {mean_photons} must be >= 0")));
        }
        Self::new(mean_photons.sqrt(), 1.0, 0.0)
    }

    pub fn with_transmissivity(self, t: f64) -> Result<Self> {
        Self::new(self.alpha0, t, self.dark_rate)
    }

    pub fn with_dark_rate(self, dark: f64) -> Result<Self> {
        Self::new(self.alpha0, self.transmissivity, dark)
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn mean_photons(&self) -> f64 {
        self.alpha0 * self.alpha0
    }

    pub fn transmissivity(&self) -> f64 {
        self.transmissivity
    }

    pub fn dark_rate(&self) -> f64 {
        self.dark_rate
    }

    /// Mean photon number reaching the receiver.
    pub fn received_photons(&self) -> f64 {
        self.transmissivity * self.mean_photons()
    }
}

/// Electro-optic modulator: phase `Δφ = (π/2)(V/V_π) + φ₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EomConfig {
    v_pi: f64,
    phi0: f64,
}

impl Default for EomConfig {
    fn default() -> Self {
        EomConfig {
            v_pi: 100.0,
            phi0: 0.0,
        }
    }
}

impl EomConfig {
    pub fn new(v_pi: f64, phi0: f64) -> Result<Self> {
        if !(v_pi.is_finite() && v_pi > 0.0) {
            return Err(Error::param(format!("V_pi = {v_pi} must be > 0")));
        }
        if !phi0.is_finite() {
            return Err(Error::param("phi0 must be finite"));
        }
        Ok(EomConfig { v_pi, phi0 })
    }

    pub fn v_pi(&self) -> f64 {
        self.v_pi
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    pub fn phase_of_voltage(&self, v: f64) -> f64 {
        FRAC_PI_2 * (v / self.v_pi) + self.phi0
    }

    /// Drive voltage producing phase `theta`.
    pub fn eom_voltage(&self, theta: f64) -> f64 {
        (theta - self.phi0) * 2.0 * self.v_pi / PI
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn point_angles() {
        let p = PolarizationPoint::new(10, 50).unwrap();
        assert!((p.circle_angle() - 2.0 * p.physical_angle()).abs() < 1e-15);
        let q = p.antipode();
        assert_eq!(q.index(), 35);
        assert!((q.physical_angle() - p.physical_angle() - FRAC_PI_2).abs() < 1e-12);
        assert_eq!(PolarizationPoint::new(30, 50).unwrap().antipode().index(), 5);
        assert!(PolarizationPoint::new(50, 50).is_err());
        assert!(PolarizationPoint::new(0, 7).is_err());
    }

    #[test]
    fn amplitude_validation() {
        let a = CoherentAmplitude::from_mean_photons(27.0).unwrap();
        assert!((a.mean_photons() - 27.0).abs() < 1e-12);
        assert!(a.with_transmissivity(1.5).is_err());
        assert!(a.with_dark_rate(-1.0).is_err());
        assert!(CoherentAmplitude::from_mean_photons(-1.0).is_err());
    }

    #[test]
    fn eom_examples() {
        let cfg = EomConfig::new(100.0, 0.0).unwrap();
        assert!((cfg.eom_voltage(PI) - 200.0).abs() < 1e-12);
        let cfg = EomConfig::new(75.0, 0.3).unwrap();
        assert!((cfg.phase_of_voltage(75.0) - (FRAC_PI_2 + 0.3)).abs() < 1e-15);
        assert!(EomConfig::new(0.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn eom_round_trip(v_pi in 1.0f64..500.0, phi0 in -3.0f64..3.0, v in -1000.0f64..1000.0) {
            let cfg = EomConfig::new(v_pi, phi0).unwrap();
            let back = cfg.eom_voltage(cfg.phase_of_voltage(v));
            prop_assert!((back - v).abs() <= 1e-12 * v.abs().max(1.0));
            let theta = cfg.phase_of_voltage(v);
            prop_assert!((cfg.phase_of_voltage(cfg.eom_voltage(theta)) - theta).abs() <= 1e-12 * theta.abs().max(1.0));
        }
    }
}
