//! Joint port statistics of a photon pair detected on both sides.
//!
//! For detections at `t_A` and `t_B` the four interfering paths are ordered
//! (short, short), (short, long), (long, short), (long, long), with path
//! coefficients `c = [1, s_B e^{iφ_B}, s_A e^{iφ_A}, s_A s_B e^{i(φ_A+φ_B)}]`
//! for port signs `s_A, s_B`. With `R_mn` the fourth-order field correlator
//! between paths `m` and `n`, the outcome weight is `c† R c`.

use nalgebra::Matrix4;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::physics::{Correlator, PropagatorCache};
use crate::{EmitterParams, Error, Result, C64};

/// Joint outcome probabilities `p[a][b]`, index 0 = port 1 (+1), 1 = port 2 (−1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPhotonOutcomeDistribution {
    pub p: [[f64; 2]; 2],
}

impl TwoPhotonOutcomeDistribution {
    pub fn total(&self) -> f64 {
        self.p[0][0] + self.p[0][1] + self.p[1][0] + self.p[1][1]
    }

    pub fn expectation(&self) -> f64 {
        self.p[0][0] + self.p[1][1] - self.p[0][1] - self.p[1][0]
    }

    /// Side A's port-1 and port-2 probabilities.
    pub fn marginal_a(&self) -> [f64; 2] {
        [self.p[0][0] + self.p[0][1], self.p[1][0] + self.p[1][1]]
    }

    pub fn marginal_b(&self) -> [f64; 2] {
        [self.p[0][0] + self.p[1][0], self.p[0][1] + self.p[1][1]]
    }
}

fn path_coefficients(sa: f64, sb: f64, phase_a: f64, phase_b: f64) -> [C64; 4] {
    [
        C64::new(1.0, 0.0),
        C64::from_polar(sb, phase_b),
        C64::from_polar(sa, phase_a),
        C64::from_polar(sa * sb, phase_a + phase_b),
    ]
}

const SIGNS: [f64; 2] = [1.0, -1.0];

fn normalise(w: [[f64; 2]; 2]) -> Result<TwoPhotonOutcomeDistribution> {
    let total: f64 = w.iter().flatten().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Numerical("pair outcome weights vanish".into()));
    }
    let mut p = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            p[a][b] = w[a][b].max(0.0) / total;
        }
    }
    Ok(TwoPhotonOutcomeDistribution { p })
}

/// Outcome distribution for a pure two-photon amplitude `ψ(τ)` of the emission
/// delay `τ = t_A − t_B`, given the detection delay `delta = t_A − t_B`.
///
/// The four paths carry `ψ(δ)`, `ψ(δ + Δt_B)`, `ψ(δ − Δt_A)` and
/// `ψ(δ − Δt_A + Δt_B)`.
pub fn two_photon_outcome_distribution(
    delta: f64,
    delay_a: f64,
    delay_b: f64,
    phase_a: f64,
    phase_b: f64,
    psi: impl Fn(f64) -> C64,
) -> Result<TwoPhotonOutcomeDistribution> {
    let amp = [psi(delta), psi(delta + delay_b), psi(delta - delay_a), psi(delta - delay_a + delay_b)];
    let mut w = [[0.0; 2]; 2];
    for (a, &sa) in SIGNS.iter().enumerate() {
        for (b, &sb) in SIGNS.iter().enumerate() {
            let c = path_coefficients(sa, sb, phase_a, phase_b);
            let z: C64 = c.iter().zip(amp.iter()).map(|(c, a)| c * a).sum();
            w[a][b] = z.norm_sqr();
        }
    }
    normalise(w)
}

/// Outcome distribution from a path correlation matrix `R`.
pub fn distribution_from_matrix(r: &Matrix4<C64>, phase_a: f64, phase_b: f64) -> Result<TwoPhotonOutcomeDistribution> {
    let mut w = [[0.0; 2]; 2];
    for (a, &sa) in SIGNS.iter().enumerate() {
        for (b, &sb) in SIGNS.iter().enumerate() {
            let c = path_coefficients(sa, sb, phase_a, phase_b);
            let mut z = C64::new(0.0, 0.0);
            for m in 0..4 {
                for n in 0..4 {
                    z += c[m].conj() * r[(m, n)] * c[n];
                }
            }
            w[a][b] = z.re;
        }
    }
    normalise(w)
}

/// Exact path correlation matrix at detection delay `delta = t_A − t_B`:
/// `R_mn = ⟨σ⁺(a_m)σ⁺(b_m) σ⁻(b_n)σ⁻(a_n)⟩` over the emission times of paths
/// `m` and `n`, evaluated with the quantum regression theorem.
pub fn pair_matrix(
    corr: &Correlator,
    delta: f64,
    delay_a: f64,
    delay_b: f64,
    cache: &mut PropagatorCache,
) -> Matrix4<C64> {
    let xs = [delta, delta - delay_a];
    let ys = [0.0, -delay_b];
    let paths = [(0, 0), (0, 1), (1, 0), (1, 1)];
    let mut r = Matrix4::zeros();
    for m in 0..4 {
        for n in m..4 {
            let (jm, km) = paths[m];
            let (jn, kn) = paths[n];
            let v = corr.ordered(&[xs[jm], ys[km]], &[xs[jn], ys[kn]], cache);
            r[(m, n)] = v;
            r[(n, m)] = v.conj();
        }
    }
    r
}

/// Path correlation matrices tabulated on a uniform grid of detection delays,
/// normalised by `ρ_ee²` so entries are O(1).
#[derive(Debug, Clone)]
pub struct PairTable {
    start: f64,
    step: f64,
    mats: Vec<Matrix4<C64>>,
}

impl PairTable {
    pub fn new(params: &EmitterParams, delay_a: f64, delay_b: f64, lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(hi > lo) || !(step > 0.0) {
            return Err(Error::param("pair table needs hi > lo and step > 0"));
        }
        let corr = Correlator::new(params)?;
        let pe = corr.excited_population();
        if !(pe > 0.0) {
            return Err(Error::param("pair table needs a driven emitter"));
        }
        let n = ((hi - lo) / step).ceil() as usize + 1;
        let scale = C64::from(1.0 / (pe * pe));
        let mats = (0..n)
            .into_par_iter()
            .map_init(PropagatorCache::new, |cache, k| {
                if cache.len() > 4096 {
                    *cache = PropagatorCache::new();
                }
                pair_matrix(&corr, lo + k as f64 * step, delay_a, delay_b, cache) * scale
            })
            .collect();
        Ok(PairTable { start: lo, step, mats })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.start, self.start + (self.mats.len() - 1) as f64 * self.step)
    }

    /// Linearly interpolated matrix; `None` outside the table.
    pub fn matrix(&self, delta: f64) -> Option<Matrix4<C64>> {
        let last = (self.mats.len() - 1) as f64;
        let x = (delta - self.start) / self.step;
        // tolerate rounding at the end points
        if !(x >= -1e-9) || x > last + 1e-9 {
            return None;
        }
        let x = x.clamp(0.0, last);
        let i = (x.floor() as usize).min(self.mats.len() - 2);
        let w = x - i as f64;
        Some(self.mats[i] * C64::from(1.0 - w) + self.mats[i + 1] * C64::from(w))
    }

    pub fn distribution(&self, delta: f64, phase_a: f64, phase_b: f64) -> Option<Result<TwoPhotonOutcomeDistribution>> {
        self.matrix(delta).map(|r| distribution_from_matrix(&r, phase_a, phase_b))
    }
}
