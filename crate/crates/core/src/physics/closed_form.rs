//! Closed-form single-emitter results: rates, weak- and strong-drive g², the
//! Bell boundary in terms of g², and the entangled-pair rate.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use super::correlation::Correlator;
use crate::{EmitterParams, Error, Result, C64};

/// Detuning-corrected saturation `s = Ω² / (2γ² + 2Δ²)`.
pub fn saturation(p: &EmitterParams) -> f64 {
    p.rabi * p.rabi / (2.0 * (p.gamma * p.gamma + p.delta * p.delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringRates {
    pub coherent: f64,
    pub incoherent: f64,
    pub total: f64,
}

/// Coherent, incoherent and total photon emission rates (s⁻¹).
pub fn scattering_rates(p: &EmitterParams) -> ScatteringRates {
    let s = saturation(p);
    let d = (1.0 + s) * (1.0 + s);
    let coherent = p.gamma * s / d;
    let incoherent = p.gamma * s * s / d;
    ScatteringRates { coherent, incoherent, total: p.gamma * s / (1.0 + s) }
}

/// Weak-drive two-photon amplitude `ψ(τ) = 1 − e^{−(γ − iΔ)|τ|}`.
pub fn two_photon_wavefunction(p: &EmitterParams, tau: f64) -> C64 {
    let k = C64::new(-p.gamma, p.delta) * tau.abs();
    C64::new(1.0, 0.0) - k.exp()
}

/// Weak-drive g²(τ) = |ψ(τ)|².
pub fn g2_weak(p: &EmitterParams, tau: f64) -> f64 {
    two_photon_wavefunction(p, tau).norm_sqr()
}

/// Resonant g²(τ) at arbitrary drive strength:
/// `1 − e^{−3γ|τ|/2}(cos Ω̃τ + (3γ/2Ω̃) sin Ω̃τ)` with `Ω̃² = Ω² − γ²/4`.
///
/// Below `Ω = γ/2` the frequency is imaginary and the hyperbolic continuation
/// is used; close to the branch point a power series avoids the 0/0.
pub fn g2_resonant_strong(gamma: f64, rabi: f64, tau: f64) -> f64 {
    let t = tau.abs();
    let a = 1.5 * gamma;
    let w2 = rabi * rabi - 0.25 * gamma * gamma;
    let osc = if w2.abs() < 1e-6 * gamma * gamma {
        // cos(wt) + a sin(wt)/w as series in w²
        let x = -w2 * t * t;
        let (mut c, mut s) = (1.0, t);
        let (mut tc, mut ts) = (1.0, t);
        let mut k = 1.0;
        while k < 200.0 {
            tc *= x / ((2.0 * k - 1.0) * (2.0 * k));
            ts *= x / ((2.0 * k) * (2.0 * k + 1.0));
            c += tc;
            s += ts;
            if tc.abs() < 1e-18 * c.abs() && ts.abs() < 1e-18 * s.abs() {
                break;
            }
            k += 1.0;
        }
        c + a * s
    } else if w2 > 0.0 {
        let w = w2.sqrt();
        (w * t).cos() + a / w * (w * t).sin()
    } else {
        let k = (-w2).sqrt();
        // e^{-a t} cosh(k t) overflows for long t unless combined first
        let ep = 0.5 * (1.0 + a / k);
        let em = 0.5 * (1.0 - a / k);
        return 1.0 - (ep * ((k - a) * t).exp() + em * ((-k - a) * t).exp());
    };
    1.0 - (-a * t).exp() * osc
}

/// Width of the antibunching dip to lowest order in τ: `¼ (Ω²/2 + γ²)^{−1/2}`.
pub fn antibunching_window(gamma: f64, rabi: f64) -> f64 {
    0.25 / (0.5 * rabi * rabi + gamma * gamma).sqrt()
}

/// Rate of photon pairs falling inside the antibunching window,
/// `γ²Ω⁴ / (16 (γ² + Ω²/2)^{5/2})`.
pub fn pair_rate(gamma: f64, rabi: f64) -> f64 {
    let w2 = rabi * rabi;
    gamma * gamma * w2 * w2 / (16.0 * (gamma * gamma + 0.5 * w2).powf(2.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRateReport {
    pub rabi_opt: f64,
    pub s0_opt: f64,
    pub np_max: f64,
    pub window: f64,
}

/// Maximises [`pair_rate`] over Ω ∈ (0, 10γ] by bisection on the logarithmic
/// derivative `4/Ω − 5Ω/(2γ² + Ω²)`.
pub fn pair_rate_optimum(gamma: f64) -> Result<PairRateReport> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::param("gamma must be > 0"));
    }
    let slope = |w: f64| 4.0 / w - 5.0 * w / (2.0 * gamma * gamma + w * w);
    let (mut lo, mut hi) = (1e-3 * gamma, 10.0 * gamma);
    if slope(lo) <= 0.0 || slope(hi) >= 0.0 {
        return Err(Error::Numerical("pair-rate maximum not bracketed".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let rabi = 0.5 * (lo + hi);
    Ok(PairRateReport {
        rabi_opt: rabi,
        s0_opt: rabi * rabi / (2.0 * gamma * gamma),
        np_max: pair_rate(gamma, rabi),
        window: antibunching_window(gamma, rabi),
    })
}

fn check_g2_pair(g2_small: f64, g2_delay: f64) -> Result<()> {
    if !(g2_small >= 0.0) || !(g2_delay >= 0.0) {
        return Err(Error::param("g² arguments must be >= 0"));
    }
    if g2_small + g2_delay == 0.0 {
        return Err(Error::Undefined("both g² arguments are zero".into()));
    }
    Ok(())
}

/// Largest CHSH value reachable when pairs at small separation (g² = `g2_small`)
/// are mixed with pairs separated by the interferometer delay (`g2_delay`).
pub fn smax_from_g2(g2_small: f64, g2_delay: f64) -> Result<f64> {
    check_g2_pair(g2_small, g2_delay)?;
    Ok(2.0 * SQRT_2 * g2_delay / (g2_small + g2_delay))
}

/// Joint correlation ⟨σ_{φA} σ_{φB}⟩ behind two interferometers.
pub fn joint_expectation_analytic(phi_a: f64, phi_b: f64, g2_small: f64, g2_delay: f64) -> Result<f64> {
    check_g2_pair(g2_small, g2_delay)?;
    Ok((g2_delay * (phi_a - phi_b).cos() + g2_small * (phi_a + phi_b).cos()) / (g2_small + g2_delay))
}

/// Single-photon expectation `⟨σ_φ⟩ = V cos φ`, with the phase measured from the
/// coherent-light fringe maximum.
pub fn single_expectation(p: &EmitterParams, delta_t: f64, phi: f64) -> Result<f64> {
    Ok(super::correlation::visibility(p, delta_t)? * phi.cos())
}

/// Same as [`single_expectation`] but with the raw interferometer phase, i.e.
/// `Re[e^{iφ} g¹(Δt)] / g¹(0)`.
pub fn single_expectation_raw(p: &EmitterParams, delta_t: f64, phi: f64) -> Result<f64> {
    if !(delta_t > 0.0) {
        return Err(Error::param("interferometer delay must be > 0"));
    }
    let c = Correlator::new(p)?.coherence(delta_t);
    Ok((C64::from_polar(1.0, phi) * c).re)
}

/// Joint correlation of uncorrelated photons: the product of single-photon
/// expectations.
pub fn separable_expectation(p: &EmitterParams, delta_t: f64, phi_a: f64, phi_b: f64) -> Result<f64> {
    let v = super::correlation::visibility(p, delta_t)?;
    Ok(v * v * phi_a.cos() * phi_b.cos())
}
