//! Emitter parameters and the reference values of the ⁸⁵Rb experiment.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result};

/// Excited-state lifetime of the ⁸⁵Rb D2 line used for the defaults (s).
pub const RB85_LIFETIME_S: f64 = 26.5e-9;

/// Residual atom-laser detuning of the experiment (rad/s).
pub const REFERENCE_DETUNING: f64 = 2.0 * PI * 2.56e6;

/// Weak-drive on-resonance saturation parameter.
pub const S0_WEAK: f64 = 0.10;

/// Strong-drive on-resonance saturation parameter.
pub const S0_STRONG: f64 = 2.75;

/// Interferometer delays of Alice's and Bob's Mach-Zehnders (s).
pub const DELAY_A_S: f64 = 46.1e-9;
pub const DELAY_B_S: f64 = 46.7e-9;

/// Nominal common interferometer delay (s).
pub const DELAY_NOMINAL_S: f64 = 46.0e-9;

/// Collection, propagation and detection efficiencies.
pub const ETA_COLLECTION: f64 = 0.012;
pub const ETA_PROPAGATION: f64 = 0.20;
pub const ETA_DETECTION: f64 = 0.86;

/// `gamma` (half the population decay rate) for a given excited-state lifetime.
pub fn gamma_from_lifetime(lifetime: f64) -> f64 {
    1.0 / (2.0 * lifetime)
}

/// A coherently driven two-level emitter in the frame rotating with the drive.
///
/// `gamma` is half the population decay rate, `delta` the laser detuning and
/// `rabi` the Rabi frequency, all in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitterParams {
    pub gamma: f64,
    pub delta: f64,
    pub rabi: f64,
}

impl EmitterParams {
    pub fn new(gamma: f64, delta: f64, rabi: f64) -> Result<Self> {
        let p = EmitterParams { gamma, delta, rabi };
        p.validate()?;
        Ok(p)
    }

    /// Parameters from the on-resonance saturation `s0 = Ω² / (2γ²)`.
    pub fn from_s0(gamma: f64, delta: f64, s0: f64) -> Result<Self> {
        if !(s0 >= 0.0) || !s0.is_finite() {
            return Err(Error::param(format!("s0 must be finite and >= 0, got {s0}")));
        }
        Self::new(gamma, delta, gamma * (2.0 * s0).sqrt())
    }

    /// Reference emitter at a given `s0`: lifetime 26.5 ns, Δ = 2π·2.56 MHz.
    pub fn reference(s0: f64) -> Self {
        Self::from_s0(gamma_from_lifetime(RB85_LIFETIME_S), REFERENCE_DETUNING, s0)
            .expect("reference parameters are valid")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::param(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.rabi >= 0.0) || !self.rabi.is_finite() {
            return Err(Error::param(format!("rabi must be >= 0, got {}", self.rabi)));
        }
        if !self.delta.is_finite() {
            return Err(Error::param("delta must be finite"));
        }
        Ok(())
    }

    /// On-resonance saturation parameter `Ω² / (2γ²)`.
    pub fn s0(&self) -> f64 {
        self.rabi * self.rabi / (2.0 * self.gamma * self.gamma)
    }

    /// Excited-state lifetime `1 / (2γ)`.
    pub fn lifetime(&self) -> f64 {
        1.0 / (2.0 * self.gamma)
    }

    pub fn with_delta(self, delta: f64) -> Self {
        EmitterParams { delta, ..self }
    }
}
