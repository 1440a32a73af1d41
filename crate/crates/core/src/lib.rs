//! Simulator for the αη keyed coherent-state cipher.
//!
//! A short seed key is expanded by an LFSR into a running key of basis
//! indices. Each data bit is sent as one of `M` polarization states on a
//! great circle of the Poincaré sphere; the receiver that knows the running
//! key only has to separate two orthogonal states, while an observer without
//! it must resolve all `M` positions through photon shot noise.
//!
//! Modules:
//!
//! * [`keystream`]: seed keys, the LFSR and running-key expansion.
//! * [`photonics`]: state geometry, the EOM voltage map, Poisson detection and
//!   truncated Fock-space numerics for the optimal-discrimination bound.
//! * [`parties`]: Alice's encoder, Bob's keyed decoder and Eve's attacks.
//! * [`analysis`]: theory curves, Monte Carlo pipelines and CSV output.
//! * [`wire`]: the framed channel emulator used by the `tx`/`rx`/`tap` roles.
//! * [`exec`]: sequential / rayon execution of independent trials.

pub mod analysis;
pub mod error;
pub mod exec;
pub mod keystream;
pub mod parties;
pub mod photonics;
pub mod rng;
pub mod wire;

pub use error::{Error, Result};
pub use exec::Execution;
