use crate::physics::{g2_weak, CorrelationCurve};
use crate::{EmitterParams, Error, Result};

/// Trapezoid integral of `f` over the curve nodes inside `[lo, hi]`, with the
/// end points added.
fn window_integral(tau: &[f64], lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut nodes = vec![lo];
    nodes.extend(tau.iter().copied().filter(|&t| t > lo && t < hi));
    nodes.push(hi);
    nodes.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (f(w[0]) + f(w[1]))).sum()
}

/// `⟨σ_zσ_z⟩` inferred from the emission statistics: the ratio of g² inside
/// the coincidence window to g² one interferometer delay away, so that
/// `−(1 − r)` is −1 for perfect antibunching and 0 for uncorrelated light.
pub fn sigma_zz_from_g2(curve: &CorrelationCurve, delta_t: f64, half_width: f64) -> Result<f64> {
    if !(half_width > 0.0) || !(delta_t > 0.0) {
        return Err(Error::param("window half-width and delay must be > 0"));
    }
    let n = curve.tau.len();
    if n < 2 || curve.tau[0] > -half_width || curve.tau[n - 1] < half_width + delta_t {
        return Err(Error::param(format!("g2 curve must cover [{:e}, {:e}] s", -half_width, half_width + delta_t)));
    }
    let g = |t: f64| curve.interpolate(t).expect("inside checked domain");
    let num = window_integral(&curve.tau, -half_width, half_width, g);
    let den = window_integral(&curve.tau, -half_width, half_width, |t| g(t + delta_t));
    if !(den > 0.0) {
        return Err(Error::Undefined("g2 vanishes one delay away from the window".into()));
    }
    Ok(-(1.0 - num / den))
}

/// [`sigma_zz_from_g2`] applied to the weak-drive two-photon wavefunction,
/// tabulated every `step` seconds.
pub fn sigma_zz_weak_model(params: &EmitterParams, delta_t: f64, half_width: f64, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::param("step must be > 0"));
    }
    let lo = -half_width;
    let n = ((half_width + delta_t - lo) / step).ceil() as usize;
    let tau: Vec<f64> = (0..=n).map(|k| lo + k as f64 * step).collect();
    let values = tau.iter().map(|&t| g2_weak(params, t)).collect();
    sigma_zz_from_g2(&CorrelationCurve { tau, values }, delta_t, half_width)
}
