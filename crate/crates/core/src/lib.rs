//! Simulation and analysis of time-bin entangled photon pairs extracted from
//! the resonance fluorescence of a single driven two-level emitter.
//!
//! The crate is organised bottom-up:
//!
//! - [`physics`]: Bloch-equation steady states, first/second-order
//!   correlations via the quantum regression theorem, closed-form limits and
//!   pair-rate optimisation.
//! - [`trajectories`]: quantum-jump Monte Carlo emission streams plus
//!   efficiency thinning, detuning jitter and a slow bunching envelope.
//! - [`franson`]: routing of photons through a beamsplitter and two
//!   unbalanced Mach-Zehnder interferometers, at amplitude level.
//! - [`analysis`]: coincidence pairing, HBT histograms, baseline fits, Pauli
//!   expectations, CHSH and window scans.
//! - [`tomography`]: maximum-likelihood reconstruction of the two-photon
//!   time-bin density matrix, fidelity and the Horodecki CHSH bound.
//!
//! All rates are angular (rad/s) and `gamma` is half the excited-state
//! population decay rate, so the lifetime is `1 / (2 * gamma)`.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod error;
pub mod franson;
pub mod io;
pub mod params;
pub mod physics;
pub mod rng;
pub mod tomography;
pub mod trajectories;

pub use error::{Error, Result};
pub use params::EmitterParams;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Version string written into every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Version of the on-disk JSON/CSV schemas.
pub const SCHEMA_VERSION: u32 = 1;
