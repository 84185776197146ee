//! No-jump evolution of the driven atom and inverse-transform sampling of the
//! waiting time until the next emission.
//!
//! Between jumps the amplitude evolves under `H_eff = H − iγ|e⟩⟨e|` starting
//! from `|g⟩` (every emission resets the atom). The survival probability
//! `S(τ) = ‖ψ(τ)‖²` is non-increasing, so a waiting time is the root of
//! `S(τ) = u` for a uniform draw `u`.

use crate::{EmitterParams, C64};

#[derive(Debug, Clone)]
pub struct WaitingTimeSampler {
    m: C64,
    q: C64,
    half_rabi: f64,
    step: f64,
    table: Vec<f64>,
    tol: f64,
}

const MAX_TABLE: usize = 1 << 20;

impl WaitingTimeSampler {
    /// `tol` is the absolute time resolution of the root search.
    pub fn new(p: &EmitterParams, tol: f64) -> Self {
        // M = −i H_eff = [[0, −iΩ/2], [−iΩ/2, iΔ − γ]]
        let m = C64::new(-p.gamma, p.delta) * 0.5;
        let q = (m * m - C64::from(0.25 * p.rabi * p.rabi)).sqrt();
        let rate = p.gamma.max(p.rabi).max(p.delta.abs());
        let step = 0.25 / rate;
        let mut s = WaitingTimeSampler { m, q, half_rabi: 0.5 * p.rabi, step, table: Vec::new(), tol };
        if p.rabi > 0.0 {
            s.build_table();
        }
        s
    }

    fn amplitudes(&self, t: f64) -> (C64, C64) {
        let (m, q) = (self.m, self.q);
        let (ch, sh) = if (q * t).norm() < 0.5 {
            // e^{mt}·(cosh qt, sinh(qt)/q) from the power series in (qt)²
            let x = q * q * t * t;
            let (mut c, mut s) = (C64::from(1.0), C64::from(1.0));
            let (mut tc, mut ts) = (C64::from(1.0), C64::from(1.0));
            for k in 1..12 {
                let k = k as f64;
                tc *= x / ((2.0 * k - 1.0) * (2.0 * k));
                ts *= x / ((2.0 * k) * (2.0 * k + 1.0));
                c += tc;
                s += ts;
            }
            let e = (m * t).exp();
            (e * c, e * s * t)
        } else {
            let ep = ((m + q) * t).exp();
            let em = ((m - q) * t).exp();
            ((ep + em) * 0.5, (ep - em) / (q * 2.0))
        };
        let g = ch - m * sh;
        let e = C64::new(0.0, -self.half_rabi) * sh;
        (g, e)
    }

    /// Probability of no emission within `t` after a jump.
    pub fn survival(&self, t: f64) -> f64 {
        if self.half_rabi == 0.0 {
            return 1.0;
        }
        let (g, e) = self.amplitudes(t);
        (g.norm_sqr() + e.norm_sqr()).min(1.0)
    }

    /// Waiting-time density `2γ |ψ_e(t)|²`, up to the factor 2γ.
    pub fn excited_amplitude_sqr(&self, t: f64) -> f64 {
        self.amplitudes(t).1.norm_sqr()
    }

    fn build_table(&mut self) {
        self.table.push(1.0);
        let mut k = 1;
        while k < MAX_TABLE {
            let s = self.survival(k as f64 * self.step);
            self.table.push(s);
            if s < 1e-15 {
                break;
            }
            k += 1;
        }
    }

    /// Solves `S(τ) = u` for `u ∈ (0, 1]`; `None` if no emission happens within
    /// `horizon`.
    pub fn sample(&self, u: f64, horizon: f64) -> Option<f64> {
        if self.table.is_empty() || horizon <= 0.0 {
            return None;
        }
        let k = self.table.partition_point(|&s| s >= u);
        let (mut lo, mut hi) = if k < self.table.len() {
            ((k - 1) as f64 * self.step, k as f64 * self.step)
        } else {
            // beyond the table: expand geometrically
            let mut lo = (self.table.len() - 1) as f64 * self.step;
            let mut hi = 2.0 * lo;
            while self.survival(hi) >= u {
                if lo > horizon {
                    return None;
                }
                lo = hi;
                hi *= 2.0;
            }
            (lo, hi)
        };
        if lo > horizon {
            return None;
        }
        while hi - lo > self.tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.survival(mid) >= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        (t <= horizon).then_some(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::Liouvillian;

    #[test]
    fn survival_matches_direct_integration() {
        // conditional no-jump evolution integrated with small Euler-free steps
        // via nalgebra's 2×2 matrix exponential
        use nalgebra::{Matrix2, Vector2};
        let p = EmitterParams::from_s0(1.0, 0.7, 2.0).unwrap();
        let w = WaitingTimeSampler::new(&p, 1e-12);
        let i = C64::new(0.0, 1.0);
        let h = Matrix2::new(
            C64::from(0.0),
            C64::from(p.rabi / 2.0),
            C64::from(p.rabi / 2.0),
            C64::new(-p.delta, -p.gamma),
        );
        for &t in &[0.0, 0.01, 0.3, 1.0, 2.5, 7.0] {
            let u = (h * (-i * t)).exp();
            let psi = u * Vector2::new(C64::from(1.0), C64::from(0.0));
            let s = psi.norm_squared();
            assert!((w.survival(t) - s).abs() < 1e-13, "t={t}");
        }
    }

    #[test]
    fn waiting_density_vanishes_at_zero() {
        let p = EmitterParams::from_s0(1.0, 0.0, 1.0).unwrap();
        let w = WaitingTimeSampler::new(&p, 1e-12);
        assert_eq!(w.excited_amplitude_sqr(0.0), 0.0);
        assert!(w.survival(1e-4) > 1.0 - 1e-12);
    }

    #[test]
    fn mean_waiting_time_is_inverse_rate() {
        // ∫ S dτ = 1 / (2γ ρ_ee,ss) for a renewal process resetting to |g⟩
        let p = EmitterParams::from_s0(1.0, 0.4, 0.8).unwrap();
        let w = WaitingTimeSampler::new(&p, 1e-12);
        let n = 200_000;
        let h = 80.0 / n as f64;
        let mut acc = 0.5 * (w.survival(0.0) + w.survival(80.0));
        for k in 1..n {
            acc += w.survival(k as f64 * h);
        }
        let mean = acc * h;
        let pe = Liouvillian::new(&p).unwrap().steady_state().unwrap().excited_population();
        assert!((mean - 1.0 / (2.0 * pe)).abs() < 1e-7 * mean);
    }

    #[test]
    fn sample_inverts_survival() {
        let p = EmitterParams::from_s0(1.0, 0.2, 0.5).unwrap();
        let w = WaitingTimeSampler::new(&p, 1e-12);
        for &u in &[0.999, 0.7, 0.2, 1e-6, 1e-17] {
            let t = w.sample(u, f64::INFINITY).unwrap();
            assert!(w.survival(t - 1e-9) >= u - 1e-8 && w.survival(t + 1e-9) <= u + 1e-8);
        }
        assert!(w.sample(1e-6, 1.0).is_none());
    }

    #[test]
    fn undriven_never_emits() {
        let p = EmitterParams::new(1.0, 0.0, 0.0).unwrap();
        assert!(WaitingTimeSampler::new(&p, 1e-12).sample(0.5, 1e9).is_none());
    }
}
