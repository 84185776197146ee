use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSettings {
    pub max_iterations: usize,
    /// Stop once `‖∇f‖∞ ≤ gradient_tol · (1 + |f|)`.
    pub gradient_tol: f64,
    /// Stop once the relative decrease of `f` stays below this for several steps.
    pub value_tol: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings { max_iterations: 2000, gradient_tol: 1e-9, value_tol: 1e-15 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum<const N: usize> {
    pub x: [f64; N],
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Quasi-Newton minimisation with an inverse-Hessian BFGS update and a
/// backtracking Armijo line search.
pub fn minimize<const N: usize, F>(f: F, x0: [f64; N], settings: &OptimizerSettings) -> Minimum<N>
where
    F: Fn(&[f64; N]) -> (f64, [f64; N]),
{
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    let mut h = [[0.0; N]; N];
    for (i, row) in h.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let mut stalls = 0;
    for it in 0..settings.max_iterations {
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax <= settings.gradient_tol * (1.0 + fx.abs()) || stalls >= 5 {
            return Minimum { x, value: fx, iterations: it, converged: true };
        }
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = -dot(&h[i], &g);
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            // lost descent: restart from steepest descent
            for (i, row) in h.iter_mut().enumerate() {
                *row = [0.0; N];
                row[i] = 1.0;
            }
            d = g.map(|v| -v);
            slope = dot(&g, &d);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut xn = x;
            for i in 0..N {
                xn[i] += step * d[i];
            }
            let (fn_, gn) = f(&xn);
            if fn_.is_finite() && fn_ <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            // no further decrease representable: accept only a near-stationary point
            let converged = gmax <= 1e3 * settings.gradient_tol * (1.0 + fx.abs());
            return Minimum { x, value: fx, iterations: it, converged };
        };
        let mut s = [0.0; N];
        let mut y = [0.0; N];
        for i in 0..N {
            s[i] = xn[i] - x[i];
            y[i] = gn[i] - g[i];
        }
        if fx - fn_ <= settings.value_tol * fx.abs().max(1.0) {
            stalls += 1;
        } else {
            stalls = 0;
        }
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if it == 0 {
                // scale the initial inverse Hessian to the observed curvature
                let scale = sy / dot(&y, &y);
                for (i, row) in h.iter_mut().enumerate() {
                    *row = [0.0; N];
                    row[i] = scale;
                }
            }
            let rho = 1.0 / sy;
            let mut hy = [0.0; N];
            for i in 0..N {
                hy[i] = dot(&h[i], &y);
            }
            let yhy = dot(&y, &hy);
            for i in 0..N {
                for j in 0..N {
                    h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        x = xn;
        fx = fn_;
        g = gn;
    }
    Minimum { x, value: fx, iterations: settings.max_iterations, converged: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64; 2]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            (v, [-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)])
        };
        let m = minimize(f, [-1.2, 1.0], &OptimizerSettings::default());
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn reports_non_convergence() {
        let f = |x: &[f64; 2]| {
            ((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2), {
                let (a, b) = (x[0], x[1]);
                [-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)]
            })
        };
        let m = minimize(f, [-1.2, 1.0], &OptimizerSettings { max_iterations: 3, ..Default::default() });
        assert!(!m.converged);
        assert_eq!(m.iterations, 3);
    }
}
