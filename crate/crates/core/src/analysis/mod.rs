//! Metrics, theory curves and the figure-reproduction pipelines.
//!
//! Every Monte Carlo routine takes a master seed and an [`Execution`]
//! strategy; trial `i` always draws from the substream `(seed, i)`, so the
//! numbers are the same whether trials run sequentially or on any number of
//! threads.
//!
//! [`Execution`]: crate::exec::Execution

mod kpa;
mod montecarlo;
pub mod output;
pub mod stats;
mod theory;
mod transmission;

pub use kpa::{kpa_trial, KpaTrial};
pub use montecarlo::{angle_variance_curve, n_sigma_mc, opaque_sequence, quarter_window, OpaqueSequence};
pub use theory::{
    angle_variance_theory, n_sigma_theory, pe_bob, pe_eve_curve, pe_eve_curve_with, pe_pure_pair,
    CurvePoint,
};
pub use transmission::{run_transmission, EveMode, SymbolRecord, TransmissionOptions, TrialReport};
