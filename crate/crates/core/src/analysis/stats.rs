//! Goodness-of-fit helpers for validating simulated streams.

use crate::{Error, Result};

/// Pearson χ² of observed counts against expected counts; bins with
/// non-positive expectation are skipped. Returns `(χ², bins used)`.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> Result<(f64, usize)> {
    if observed.len() != expected.len() {
        return Err(Error::param("observed and expected lengths differ"));
    }
    let mut chi2 = 0.0;
    let mut n = 0;
    for (&o, &e) in observed.iter().zip(expected) {
        if e > 0.0 {
            let d = o as f64 - e;
            chi2 += d * d / e;
            n += 1;
        }
    }
    Ok((chi2, n))
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::param("KS test needs two non-empty samples"));
    }
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok((d, kolmogorov_q(lambda)))
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = sign * (-2.0 * k * k * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Standard error of an event rate estimated from `n` renewal intervals with
/// the given sample mean and variance (renewal-process central limit theorem).
pub fn renewal_rate_se(mean_interval: f64, var_interval: f64, duration: f64) -> f64 {
    (var_interval / mean_interval.powi(3) / duration).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_exact_match_is_zero() {
        assert_eq!(chi_square(&[4, 9], &[4.0, 9.0]).unwrap(), (0.0, 2));
        assert_eq!(chi_square(&[4, 9], &[0.0, 9.0]).unwrap(), (0.0, 1));
    }

    #[test]
    fn ks_identical_and_shifted() {
        let x: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let (d, p) = ks_two_sample(&x, &x).unwrap();
        assert_eq!(d, 0.0);
        assert!(p > 0.99);
        let y: Vec<f64> = x.iter().map(|v| v + 0.2).collect();
        let (d, p) = ks_two_sample(&x, &y).unwrap();
        assert!((d - 0.2).abs() < 2e-3);
        assert!(p < 1e-10);
    }

    #[test]
    fn kolmogorov_known_quantile() {
        // Q(1.358) ≈ 0.05
        assert!((kolmogorov_q(1.358) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn poisson_rate_se() {
        // exponential intervals: var = mean², SE = √(r/T)
        let r: f64 = 1000.0;
        let se = renewal_rate_se(1.0 / r, 1.0 / (r * r), 10.0);
        assert!((se - (r / 10.0).sqrt()).abs() < 1e-12);
    }
}
