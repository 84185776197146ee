//! First- and second-order coherence of the fluorescence from the quantum
//! regression theorem.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use nalgebra::{Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use super::bloch::{lowering, raising, AtomState, Liouvillian};
use crate::{EmitterParams, Error, Result, C64};

/// Sampled correlation function. `V` is `f64` for g² and `C64` for g¹.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve<V = f64> {
    pub tau: Vec<f64>,
    pub values: Vec<V>,
}

impl<V> CorrelationCurve<V> {
    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &V)> {
        self.tau.iter().copied().zip(self.values.iter())
    }
}

impl CorrelationCurve<f64> {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "tau_s,value")?;
        for (t, v) in self.iter() {
            writeln!(w, "{t:e},{v:e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "tau_s,value" => {}
            _ => return Err(Error::Format("expected header `tau_s,value`".into())),
        }
        let mut curve = CorrelationCurve { tau: Vec::new(), values: Vec::new() };
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (t, v) =
                line.split_once(',').ok_or_else(|| Error::Format(format!("line {}: expected two columns", n + 2)))?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Format(format!("line {}: {e}", n + 2)));
            curve.tau.push(parse(t)?);
            curve.values.push(parse(v)?);
        }
        check_grid(&curve.tau)?;
        Ok(curve)
    }

    /// Linear interpolation; `None` outside the sampled range.
    pub fn interpolate(&self, tau: f64) -> Option<f64> {
        let n = self.tau.len();
        if n == 0 || tau < self.tau[0] || tau > self.tau[n - 1] {
            return None;
        }
        let i = self.tau.partition_point(|&t| t <= tau);
        if i == n {
            return Some(self.values[n - 1]);
        }
        let (t0, t1) = (self.tau[i - 1], self.tau[i]);
        let w = (tau - t0) / (t1 - t0);
        Some(self.values[i - 1] * (1.0 - w) + self.values[i] * w)
    }
}

impl CorrelationCurve<C64> {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "tau_s,value_re,value_im")?;
        for (t, v) in self.iter() {
            writeln!(w, "{t:e},{:e},{:e}", v.re, v.im)?;
        }
        Ok(())
    }
}

/// Rejects grids that are not strictly increasing or contain non-finite values.
pub fn check_grid(tau: &[f64]) -> Result<()> {
    for (i, t) in tau.iter().enumerate() {
        if !t.is_finite() {
            return Err(Error::param(format!("non-finite grid value at index {i}")));
        }
    }
    for i in 1..tau.len() {
        if !(tau[i] > tau[i - 1]) {
            return Err(Error::NonIncreasingGrid { index: i });
        }
    }
    Ok(())
}

/// Steady-state correlator engine for one emitter.
#[derive(Debug, Clone)]
pub struct Correlator {
    liouvillian: Liouvillian,
    steady: AtomState,
}

impl Correlator {
    pub fn new(params: &EmitterParams) -> Result<Self> {
        let liouvillian = Liouvillian::new(params)?;
        let steady = liouvillian.steady_state()?;
        Ok(Correlator { liouvillian, steady })
    }

    pub fn params(&self) -> &EmitterParams {
        self.liouvillian.params()
    }

    pub fn liouvillian(&self) -> &Liouvillian {
        &self.liouvillian
    }

    pub fn steady_state(&self) -> &AtomState {
        &self.steady
    }

    pub fn excited_population(&self) -> f64 {
        self.steady.excited_population()
    }

    /// g²(τ), symmetric in τ. Zero when the atom is not driven.
    pub fn g2(&self, tau: f64) -> f64 {
        let pe = self.steady.excited_population();
        if pe <= 0.0 {
            return 1.0;
        }
        // σ⁻ρσ⁺ is the ground state scaled by ρ_ee
        let after = self.liouvillian.evolve_state(&AtomState::ground(), tau.abs());
        after.excited_population() / pe
    }

    /// g¹(τ) = ⟨σ⁺(t+τ)σ⁻(t)⟩, with g¹(−τ) = g¹(τ)*.
    pub fn g1(&self, tau: f64) -> C64 {
        let seed = lowering() * self.steady.0;
        let x = self.liouvillian.evolve(&seed, tau.abs());
        let v = x[(0, 1)];
        if tau < 0.0 {
            v.conj()
        } else {
            v
        }
    }

    /// Normalised first-order coherence g¹(Δt)/g¹(0).
    pub fn coherence(&self, delta_t: f64) -> C64 {
        let pe = self.steady.excited_population();
        if pe <= 0.0 {
            return C64::new(1.0, 0.0);
        }
        self.g1(delta_t) / pe
    }

    /// Time-ordered multi-time correlator
    /// `⟨σ⁺(c₁)…σ⁺(c_k) σ⁻(a_k)…σ⁻(a₁)⟩` in steady state.
    ///
    /// Events are processed in chronological order: each annihilation multiplies
    /// the propagated operator by σ⁻ from the left, each creation by σ⁺ from the
    /// right. Valid for the normally ordered, time-ordered products used by
    /// photodetection.
    pub fn ordered(&self, creations: &[f64], annihilations: &[f64], cache: &mut PropagatorCache) -> C64 {
        let mut events: Vec<(f64, bool)> =
            creations.iter().map(|&t| (t, true)).chain(annihilations.iter().map(|&t| (t, false))).collect();
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let sm = lowering();
        let sp = raising();
        let mut op: Matrix2<C64> = self.steady.0;
        let mut now = match events.first() {
            Some(e) => e.0,
            None => return C64::new(1.0, 0.0),
        };
        for (t, create) in events {
            let dt = t - now;
            if dt > 0.0 {
                let prop = cache.get(&self.liouvillian, dt);
                op = self.liouvillian.evolve_with(prop, &op);
            }
            now = t;
            op = if create { op * sp } else { sm * op };
        }
        op[(0, 0)] + op[(1, 1)]
    }
}

/// Memoises `exp(L t)` for repeated time steps.
#[derive(Debug, Default, Clone)]
pub struct PropagatorCache {
    map: HashMap<u64, Matrix4<C64>>,
}

impl PropagatorCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, l: &Liouvillian, t: f64) -> &Matrix4<C64> {
        self.map.entry(t.to_bits()).or_insert_with(|| l.propagator(t))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Normalised intensity correlation on a grid via the quantum regression theorem.
pub fn liouvillian_g2(params: &EmitterParams, tau: &[f64]) -> Result<CorrelationCurve> {
    check_grid(tau)?;
    let c = Correlator::new(params)?;
    let values = tau.iter().map(|&t| c.g2(t)).collect();
    Ok(CorrelationCurve { tau: tau.to_vec(), values })
}

/// Field correlation ⟨σ⁺(t+τ)σ⁻(t)⟩ in the drive frame, unnormalised.
pub fn liouvillian_g1(params: &EmitterParams, tau: &[f64]) -> Result<CorrelationCurve<C64>> {
    check_grid(tau)?;
    let c = Correlator::new(params)?;
    let values = tau.iter().map(|&t| c.g1(t)).collect();
    Ok(CorrelationCurve { tau: tau.to_vec(), values })
}

/// Output-port rates `(n₁, n₂)` of an unbalanced interferometer with delay
/// `delta_t` and phase `phi`, in units of the emission rate into the
/// interferometer.
///
/// Each port sees the field `½[σ⁻(t) ± e^{iφ}σ⁻(t−Δt)]`.
pub fn fringe_rates(params: &EmitterParams, delta_t: f64, phi: f64) -> Result<(f64, f64)> {
    if !(delta_t > 0.0) {
        return Err(Error::param("interferometer delay must be > 0"));
    }
    let c = Correlator::new(params)?;
    let g0 = c.excited_population();
    let cross = (C64::from_polar(1.0, phi) * c.g1(delta_t)).re;
    Ok((0.5 * (g0 + cross), 0.5 * (g0 - cross)))
}

/// Single-photon fringe visibility behind an interferometer with delay `delta_t`.
pub fn visibility(params: &EmitterParams, delta_t: f64) -> Result<f64> {
    if !(delta_t > 0.0) {
        return Err(Error::param("interferometer delay must be > 0"));
    }
    let c = Correlator::new(params)?;
    Ok(c.coherence(delta_t).norm().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn g2_vanishes_at_zero_delay() {
        for &(s0, d) in &[(1e-3, 0.0), (0.1, 0.85), (2.75, 0.85), (30.0, -3.0)] {
            let p = EmitterParams::from_s0(1.0, d, s0).unwrap();
            let c = Correlator::new(&p).unwrap();
            assert!(c.g2(0.0).abs() < 1e-10);
        }
    }

    #[test]
    fn g1_at_zero_is_excited_population() {
        let p = EmitterParams::from_s0(1.0, 0.6, 1.7).unwrap();
        let c = Correlator::new(&p).unwrap();
        let s = p.rabi * p.rabi / (2.0 * (1.0 + 0.36));
        let g = c.g1(0.0);
        assert!((g.re - s / (2.0 * (1.0 + s))).abs() < 1e-13);
        assert!(g.im.abs() < 1e-13);
    }

    #[test]
    fn long_delay_coherence_is_coherent_fraction() {
        // |⟨σ⁻⟩|² / ρ_ee = 1/(1+s)
        let p = EmitterParams::from_s0(1.0, 0.5, 2.0).unwrap();
        let c = Correlator::new(&p).unwrap();
        let s = p.rabi * p.rabi / (2.0 * 1.25);
        let v = c.coherence(60.0).norm();
        assert!((v - 1.0 / (1.0 + s)).abs() < 1e-10);
    }

    #[test]
    fn fringe_scan_matches_visibility() {
        let p = EmitterParams::reference(2.75);
        let dt = 46e-9;
        let v = visibility(&p, dt).unwrap();
        let (mut lo, mut hi) = (f64::MAX, f64::MIN);
        for k in 0..3600 {
            let (n1, _) = fringe_rates(&p, dt, 2.0 * PI * k as f64 / 3600.0).unwrap();
            lo = lo.min(n1);
            hi = hi.max(n1);
        }
        assert!(((hi - lo) / (hi + lo) - v).abs() < 1e-5);
    }

    #[test]
    fn reference_visibilities() {
        // frozen from an independent scipy expm evaluation of the same Bloch model
        let weak = visibility(&EmitterParams::reference(0.10), 46e-9).unwrap();
        let strong = visibility(&EmitterParams::reference(2.75), 46e-9).unwrap();
        assert!((weak - 0.9795).abs() < 5e-4, "{weak}");
        assert!((strong - 0.5615).abs() < 5e-4, "{strong}");
    }

    #[test]
    fn ordered_correlator_reduces_to_g2() {
        let p = EmitterParams::from_s0(1.0, 0.3, 1.2).unwrap();
        let c = Correlator::new(&p).unwrap();
        let mut cache = PropagatorCache::new();
        let pe = c.excited_population();
        for &t in &[0.0, 0.4, 1.3, 5.0] {
            let g = c.ordered(&[0.0, t], &[0.0, t], &mut cache);
            assert!((g.re / (pe * pe) - c.g2(t)).abs() < 1e-12);
            assert!(g.im.abs() < 1e-14);
        }
    }

    #[test]
    fn grid_must_increase() {
        let p = EmitterParams::reference(0.1);
        assert!(matches!(liouvillian_g2(&p, &[0.0, 1e-9, 1e-9]), Err(Error::NonIncreasingGrid { index: 2 })));
    }

    #[test]
    fn csv_round_trip() {
        let curve = CorrelationCurve { tau: vec![0.0, 1e-9, 2.5e-9], values: vec![0.0, 0.25, 0.75] };
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let back = CorrelationCurve::read_csv(&buf[..]).unwrap();
        assert_eq!(curve, back);
    }
}
