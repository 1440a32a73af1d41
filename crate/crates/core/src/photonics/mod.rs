//! Physical model: constellation geometry, the EOM voltage map, photon
//! counting and truncated Fock-space numerics.
//!
//! Two realizations of the same constellation are used. Detection is
//! simulated on two polarization modes (an analyzer plus two photon
//! counters). The optimal-discrimination bound is computed on the single-mode
//! realization `|α₀ e^{iθ}⟩` in a truncated number basis.

mod detection;
mod fock;
mod geometry;
mod poisson;

pub use detection::{detection_means, sample_detection, DetectionRecord};
pub use fock::{
    coherent_overlap, fock_density, mixture_density, mixture_density_with, trace_distance,
    helstrom_error, truncation_dim, truncation_dim_with_max, BitAssignment, FockOperator,
    DEFAULT_MAX_DIM, DEFAULT_TAIL_BOUND,
};
pub use geometry::{CoherentAmplitude, EomConfig, PolarizationPoint};
pub use poisson::{ln_poisson_pmf, Poisson};
