//! CHSH value as a function of the coincidence window half width.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use super::coincidence::joint_counts;
use super::estimators::{chsh_from_counts, ChshSettings, CHSH_SIGNS};
use crate::franson::{distribution_from_matrix, DetectionEvent, InterferometerConfig, PairTable};
use crate::physics::{joint_expectation_analytic, Correlator};
use crate::{EmitterParams, Error, Result};

/// Windowed S as a function of the half width `δt`.
pub trait WindowModel {
    fn s(&self, half_width: f64) -> Result<f64>;
}

/// Averages the two-g² correlation formula over the window.
///
/// The coincidence density at detection delay δ is proportional to
/// `g²(δ) + g²(Δt)`, so weighting each correlation by it reduces to using the
/// window mean of g²(δ) in the formula. Optionally the curve is mapped
/// affinely so that its large-window limit equals the CHSH value of
/// uncorrelated photons with the emitter's single-photon visibility, which
/// accounts for incoherent scattering at strong drive.
#[derive(Debug, Clone)]
pub struct FormulaWindow {
    corr: Correlator,
    settings: ChshSettings,
    g2_delay: f64,
    rescale: Option<(f64, f64, f64)>,
}

impl FormulaWindow {
    pub fn new(params: &EmitterParams, delay: f64, settings: ChshSettings, rescale_to_separable: bool) -> Result<Self> {
        if !(delay > 0.0) {
            return Err(Error::param("interferometer delay must be > 0"));
        }
        let corr = Correlator::new(params)?;
        let g2_delay = corr.g2(delay);
        let mut m = FormulaWindow { corr, settings, g2_delay, rescale: None };
        if rescale_to_separable {
            let s0 = m.raw(0.0)?;
            let s_inf = m.raw(1.0)?;
            let v = m.corr.coherence(delay).norm();
            let s_sep = settings
                .pairs()
                .iter()
                .zip(CHSH_SIGNS)
                .map(|(&(a, b), k)| k * v * v * a.cos() * b.cos())
                .sum::<f64>()
                .abs();
            m.rescale = Some((s0, s_inf, s_sep));
        }
        Ok(m)
    }

    fn raw(&self, g2_mean: f64) -> Result<f64> {
        let mut s = 0.0;
        for (&(a, b), k) in self.settings.pairs().iter().zip(CHSH_SIGNS) {
            s += k * joint_expectation_analytic(a, b, g2_mean, self.g2_delay)?;
        }
        Ok(s.abs())
    }

    /// Mean of g² over `[−δt, δt]` by composite Simpson quadrature.
    pub fn mean_g2(&self, half_width: f64) -> f64 {
        let n = 400;
        let h = half_width / n as f64;
        let mut acc = self.corr.g2(0.0) + self.corr.g2(half_width);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * self.corr.g2(k as f64 * h);
        }
        acc * h / 3.0 / half_width
    }

    pub fn g2_delay(&self) -> f64 {
        self.g2_delay
    }
}

impl WindowModel for FormulaWindow {
    fn s(&self, half_width: f64) -> Result<f64> {
        if !(half_width > 0.0) {
            return Err(Error::param("window half width must be > 0"));
        }
        let s = self.raw(self.mean_g2(half_width))?;
        Ok(match self.rescale {
            Some((s0, s_inf, s_sep)) if (s0 - s_inf).abs() > 1e-15 => s_sep + (s - s_inf) * (s0 - s_sep) / (s0 - s_inf),
            _ => s,
        })
    }
}

/// Windowed S from the full four-time pair correlations, integrating the
/// outcome weights of each setting over the window.
#[derive(Debug, Clone)]
pub struct ExactWindow {
    center: f64,
    start: f64,
    step: f64,
    /// Cumulative trapezoid integrals: `[setting][outcome a][outcome b][node]`.
    cumulative: Vec<[[Vec<f64>; 2]; 2]>,
    max_half_width: f64,
}

impl ExactWindow {
    pub fn new(
        params: &EmitterParams,
        config: &InterferometerConfig,
        settings: ChshSettings,
        center: f64,
        max_half_width: f64,
    ) -> Result<Self> {
        config.validate()?;
        if !(max_half_width > 0.0) {
            return Err(Error::param("window half width must be > 0"));
        }
        let step = 0.02e-9f64.min(0.01 * params.lifetime());
        let lo = center - max_half_width;
        let hi = center + max_half_width;
        let table = PairTable::new(params, config.delay_a, config.delay_b, lo, hi, step)?;
        let corr = Correlator::new(params)?;
        let (sa, sb) = if config.lock_to_fringe {
            (corr.coherence(config.delay_a).arg(), corr.coherence(config.delay_b).arg())
        } else {
            (0.0, 0.0)
        };
        let nodes = ((hi - lo) / step).ceil() as usize + 1;
        let mut cumulative = Vec::new();
        for &(pa, pb) in settings.pairs().iter() {
            let mut w: [[Vec<f64>; 2]; 2] = Default::default();
            let mut prev = [[0.0; 2]; 2];
            for k in 0..nodes {
                let x = (lo + k as f64 * step).min(table.range().1);
                let r = table.matrix(x).ok_or_else(|| Error::Numerical("pair table range".into()))?;
                // unnormalised weights: undo the normalisation of the outcome distribution
                let tr = (r[(0, 0)] + r[(1, 1)] + r[(2, 2)] + r[(3, 3)]).re * 4.0;
                let d = distribution_from_matrix(&r, pa - sa, pb - sb)?;
                for a in 0..2 {
                    for b in 0..2 {
                        let v = d.p[a][b] * tr;
                        let c = if k == 0 { 0.0 } else { w[a][b][k - 1] + 0.5 * step * (prev[a][b] + v) };
                        w[a][b].push(c);
                        prev[a][b] = v;
                    }
                }
            }
            cumulative.push(w);
        }
        Ok(ExactWindow { center, start: lo, step, cumulative, max_half_width })
    }

    fn integral(&self, curve: &[f64], x: f64) -> f64 {
        let u = ((x - self.start) / self.step).clamp(0.0, (curve.len() - 1) as f64);
        let i = (u.floor() as usize).min(curve.len() - 2);
        let f = u - i as f64;
        curve[i] * (1.0 - f) + curve[i + 1] * f
    }

    /// Window-averaged correlation of each setting.
    pub fn expectations(&self, half_width: f64) -> Result<[f64; 4]> {
        if !(half_width > 0.0) || half_width > self.max_half_width * (1.0 + 1e-12) {
            return Err(Error::param(format!(
                "window half width {half_width:e} outside (0, {:e}]",
                self.max_half_width
            )));
        }
        let (x0, x1) = (self.center - half_width, self.center + half_width);
        let mut out = [0.0; 4];
        for (k, w) in self.cumulative.iter().enumerate() {
            let mut m = [[0.0; 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    m[a][b] = self.integral(&w[a][b], x1) - self.integral(&w[a][b], x0);
                }
            }
            let tot = m[0][0] + m[0][1] + m[1][0] + m[1][1];
            out[k] = (m[0][0] + m[1][1] - m[0][1] - m[1][0]) / tot;
        }
        Ok(out)
    }
}

impl WindowModel for ExactWindow {
    fn s(&self, half_width: f64) -> Result<f64> {
        let e = self.expectations(half_width)?;
        Ok(e.iter().zip(CHSH_SIGNS).map(|(e, k)| k * e).sum::<f64>().abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub mode: String,
    pub windows: Vec<f64>,
    pub s: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
    pub coincidences: Option<Vec<u64>>,
}

fn check_windows(windows: &[f64]) -> Result<()> {
    if windows.is_empty() {
        return Err(Error::param("no windows to scan"));
    }
    crate::physics::check_grid(windows)?;
    if windows[0] <= 0.0 {
        return Err(Error::param("window half widths must be > 0"));
    }
    Ok(())
}

pub fn s_vs_window_scan(model: &impl WindowModel, mode: &str, windows: &[f64]) -> Result<ScanResult> {
    check_windows(windows)?;
    let s = windows.iter().map(|&w| model.s(w)).collect::<Result<Vec<_>>>()?;
    Ok(ScanResult { mode: mode.into(), windows: windows.to_vec(), s, sigma: None, coincidences: None })
}

/// Re-windows simulated detections of the four settings for every half width.
/// Windows where some setting has no coincidences are left out.
pub fn s_vs_window_simulated(events: &[Vec<DetectionEvent>; 4], center: f64, windows: &[f64]) -> Result<ScanResult> {
    check_windows(windows)?;
    let mut s = Vec::new();
    let mut sigma = Vec::new();
    let mut n = Vec::new();
    let mut kept = Vec::new();
    for &w in windows {
        let counts = [
            joint_counts(&events[0], center, w)?,
            joint_counts(&events[1], center, w)?,
            joint_counts(&events[2], center, w)?,
            joint_counts(&events[3], center, w)?,
        ];
        let r = match chsh_from_counts(counts) {
            Ok(r) => r,
            Err(Error::Undefined(why)) => {
                log::warn!("skipping window {w:e}: {why}");
                continue;
            }
            Err(e) => return Err(e),
        };
        kept.push(w);
        n.push(r.total_coincidences().unwrap_or(0));
        s.push(r.s);
        sigma.push(r.sigma_s);
    }
    Ok(ScanResult { mode: "simulation".into(), windows: kept, s, sigma: Some(sigma), coincidences: Some(n) })
}

/// g² level below which the point-wise correlation formula violates the CHSH
/// bound: `(√2 − 1) g²(Δt)`.
pub fn bell_threshold_g2(g2_delay: f64) -> f64 {
    (SQRT_2 - 1.0) * g2_delay
}

/// Largest half width in `(0, max]` at which the windowed S is still ≥ 2.
///
/// Scans in `step` increments for the last downward crossing and refines it by
/// bisection. `None` if S < 2 already at the smallest window; `Some(max)` if S
/// never drops below 2.
pub fn bell_violation_threshold(model: &impl WindowModel, max: f64, step: f64) -> Result<Option<f64>> {
    if !(max > 0.0) || !(step > 0.0) {
        return Err(Error::param("threshold search needs max > 0 and step > 0"));
    }
    let mut grid = Vec::new();
    let mut x = step;
    while x < max {
        grid.push(x);
        x += step;
    }
    grid.push(max);
    let vals = grid.iter().map(|&w| model.s(w)).collect::<Result<Vec<_>>>()?;
    let last = match vals.iter().rposition(|&v| v >= 2.0) {
        None => return Ok(None),
        Some(i) if i + 1 == vals.len() => return Ok(Some(max)),
        Some(i) => i,
    };
    let (mut lo, mut hi) = (grid[last], grid[last + 1]);
    while hi - lo > 1e-6 * step {
        let mid = 0.5 * (lo + hi);
        if model.s(mid)? >= 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}
