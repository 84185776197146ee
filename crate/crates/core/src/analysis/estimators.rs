use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::coincidence::JointCounts;
use crate::{Error, Result};

/// A value with its one-sigma uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

/// `(n₁ − n₂)/(n₁ + n₂)` with binomial error `√((1 − E²)/N)`.
pub fn expectation_single(n1: u64, n2: u64) -> Result<Estimate> {
    let n = n1 + n2;
    if n == 0 {
        return Err(Error::Undefined("no detections".into()));
    }
    let e = (n1 as f64 - n2 as f64) / n as f64;
    Ok(Estimate { value: e, sigma: ((1.0 - e * e) / n as f64).sqrt() })
}

/// `(n₁₁ + n₂₂ − n₁₂ − n₂₁)/N` with binomial error.
pub fn expectation_joint(n11: u64, n22: u64, n12: u64, n21: u64) -> Result<Estimate> {
    expectation_single(n11 + n22, n12 + n21)
}

pub fn expectation_from_counts(c: &JointCounts) -> Result<Estimate> {
    expectation_joint(c.n[0][0], c.n[1][1], c.n[0][1], c.n[1][0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub phi_a: f64,
    pub phi_a_prime: f64,
    pub phi_b: f64,
    pub phi_b_prime: f64,
}

impl Default for ChshSettings {
    fn default() -> Self {
        ChshSettings { phi_a: 0.0, phi_a_prime: PI / 2.0, phi_b: PI / 4.0, phi_b_prime: 3.0 * PI / 4.0 }
    }
}

impl ChshSettings {
    /// Phase pairs in the order (a,b), (a′,b), (a,b′), (a′,b′).
    pub fn pairs(&self) -> [(f64, f64); 4] {
        [
            (self.phi_a, self.phi_b),
            (self.phi_a_prime, self.phi_b),
            (self.phi_a, self.phi_b_prime),
            (self.phi_a_prime, self.phi_b_prime),
        ]
    }
}

/// Sign of each term in `S = E(a,b) + E(a′,b) − E(a,b′) + E(a′,b′)`.
pub const CHSH_SIGNS: [f64; 4] = [1.0, 1.0, -1.0, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    pub s: f64,
    pub sigma_s: f64,
    pub expectations: [Estimate; 4],
    pub counts: Option<[JointCounts; 4]>,
}

impl ChshResult {
    pub fn total_coincidences(&self) -> Option<u64> {
        self.counts.map(|c| c.iter().map(JointCounts::total).sum())
    }
}

/// CHSH combination of four correlations, errors added in quadrature
/// (settings measured independently).
pub fn chsh_s(e: [Estimate; 4]) -> ChshResult {
    let s: f64 = e.iter().zip(CHSH_SIGNS).map(|(e, k)| k * e.value).sum();
    let sigma_s = e.iter().map(|e| e.sigma * e.sigma).sum::<f64>().sqrt();
    ChshResult { s: s.abs(), sigma_s, expectations: e, counts: None }
}

pub fn chsh_from_counts(counts: [JointCounts; 4]) -> Result<ChshResult> {
    let mut e = [Estimate { value: 0.0, sigma: 0.0 }; 4];
    for (k, c) in counts.iter().enumerate() {
        e[k] = expectation_from_counts(c)?;
    }
    let mut r = chsh_s(e);
    r.counts = Some(counts);
    Ok(r)
}
