use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::io::first_decreasing;
use crate::{Error, Result};

/// Histogram of `τ = t_B − t_A` over all pairs with `τ ∈ [min_tau, max_tau)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceHistogram {
    pub bin_width: f64,
    pub min_tau: f64,
    pub max_tau: f64,
    pub counts: Vec<u64>,
    /// Counts per bin corresponding to g² = 1.
    pub normalization: f64,
}

impl CoincidenceHistogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn center(&self, k: usize) -> f64 {
        self.min_tau + (k as f64 + 0.5) * self.bin_width
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.bins()).map(|k| self.center(k)).collect()
    }

    /// Index of the bin containing `tau`.
    pub fn bin_of(&self, tau: f64) -> Option<usize> {
        if tau < self.min_tau || tau >= self.max_tau {
            return None;
        }
        Some((((tau - self.min_tau) / self.bin_width) as usize).min(self.bins() - 1))
    }

    pub fn normalized(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.normalization).collect()
    }

    /// Normalises to the accidental level of uncorrelated streams with the
    /// given singles counts over `duration`: `n_A n_B w / T`.
    pub fn with_poisson_normalization(mut self, n_a: usize, n_b: usize, duration: f64) -> Self {
        self.normalization = n_a as f64 * n_b as f64 * self.bin_width / duration;
        self
    }

    /// Merges `factor` adjacent bins.
    pub fn rebin(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.bins().is_multiple_of(factor) {
            return Err(Error::param(format!("cannot rebin {} bins by {factor}", self.bins())));
        }
        let counts = self.counts.chunks(factor).map(|c| c.iter().sum()).collect();
        Ok(CoincidenceHistogram {
            bin_width: self.bin_width * factor as f64,
            min_tau: self.min_tau,
            max_tau: self.max_tau,
            counts,
            normalization: self.normalization * factor as f64,
        })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "tau_s,counts,g2_normalized")?;
        for (k, &c) in self.counts.iter().enumerate() {
            writeln!(w, "{:e},{c},{:e}", self.center(k), c as f64 / self.normalization)?;
        }
        Ok(())
    }
}

/// All-pairs delay histogram on `[−span, span)`. `2·span` must be an integer
/// multiple of `bin_width`.
pub fn g2_histogram(a: &[f64], b: &[f64], bin_width: f64, span: f64) -> Result<CoincidenceHistogram> {
    if !(bin_width > 0.0) || !(span > 0.0) {
        return Err(Error::param("histogram needs bin_width > 0 and span > 0"));
    }
    let n = (2.0 * span / bin_width).round();
    if (n * bin_width - 2.0 * span).abs() > 1e-9 * span || n < 1.0 {
        return Err(Error::param("2·span must be a whole number of bins"));
    }
    if let Some(index) = first_decreasing(a).or_else(|| first_decreasing(b)) {
        return Err(Error::Unsorted { index });
    }
    let n = n as usize;
    let mut counts = vec![0u64; n];
    let mut lo = 0;
    for &ta in a {
        while lo < b.len() && b[lo] - ta < -span {
            lo += 1;
        }
        let mut j = lo;
        while j < b.len() {
            let tau = b[j] - ta;
            if tau >= span {
                break;
            }
            let k = (((tau + span) / bin_width) as usize).min(n - 1);
            counts[k] += 1;
            j += 1;
        }
    }
    Ok(CoincidenceHistogram { bin_width, min_tau: -span, max_tau: span, counts, normalization: 1.0 })
}

/// Fit of `N (1 + A e^{−|τ|/t_b})` to the histogram wings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineFit {
    pub amplitude: f64,
    pub timescale: f64,
    /// `1 + A`, the bunching level near zero delay relative to the far wings.
    pub baseline: f64,
    /// Uncorrelated level `N` in counts per bin.
    pub level: f64,
    /// Counts per bin that define g² = 1 at short delays: `N (1 + A)`.
    pub normalization: f64,
    pub residual: f64,
}

impl BaselineFit {
    pub fn apply(&self, hist: &CoincidenceHistogram) -> CoincidenceHistogram {
        CoincidenceHistogram { normalization: self.normalization, ..hist.clone() }
    }
}

/// Linear least squares in `(N, N·A)` at fixed `t_b`; returns (N, A, SSR).
fn linear_fit(x: &[f64], y: &[f64], tb: f64) -> (f64, f64, f64) {
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let e = (-xi / tb).exp();
        s11 += 1.0;
        s12 += e;
        s22 += e * e;
        r1 += yi;
        r2 += e * yi;
    }
    let det = s11 * s22 - s12 * s12;
    let (n, na) = if det.abs() > 1e-12 * s11 * s22.max(1e-300) {
        ((s22 * r1 - s12 * r2) / det, (s11 * r2 - s12 * r1) / det)
    } else {
        (r1 / s11, 0.0)
    };
    let ssr = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - n - na * (-xi / tb).exp();
            r * r
        })
        .sum();
    let a = if n != 0.0 { na / n } else { 0.0 };
    (n, a, ssr)
}

/// Least-squares fit of the slow bunching envelope to bins with
/// `|τ| ≥ min_tau`.
///
/// The model is linear in `N` and `N·A`, so those are solved exactly for each
/// trial `t_b`; `t_b` itself is found by a log-spaced scan followed by
/// golden-section refinement.
pub fn fit_baseline(hist: &CoincidenceHistogram, min_tau: f64) -> Result<BaselineFit> {
    let (x, y): (Vec<f64>, Vec<f64>) =
        (0..hist.bins()).map(|k| (hist.center(k).abs(), hist.counts[k] as f64)).filter(|(t, _)| *t >= min_tau).unzip();
    if x.len() < 3 {
        return Err(Error::param(format!("only {} bins in the fit region", x.len())));
    }
    let cost = |ln_tb: f64| linear_fit(&x, &y, ln_tb.exp()).2;
    let lo = (0.5 * hist.bin_width).ln();
    let hi = (50.0 * hist.max_tau.abs().max(hist.min_tau.abs())).ln();
    let grid = 80;
    let mut best = (f64::INFINITY, lo);
    for k in 0..=grid {
        let v = lo + (hi - lo) * k as f64 / grid as f64;
        let c = cost(v);
        if c < best.0 {
            best = (c, v);
        }
    }
    let h = (hi - lo) / grid as f64;
    let (mut a, mut b) = (best.1 - h, best.1 + h);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut iterations = 0;
    while b - a > 1e-10 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if cost(c) < cost(d) {
            b = d;
        } else {
            a = c;
        }
        iterations += 1;
        if iterations > 500 {
            return Err(Error::NonConvergence { iterations });
        }
    }
    let tb = (0.5 * (a + b)).exp();
    let (level, amplitude, residual) = linear_fit(&x, &y, tb);
    if !level.is_finite() || !amplitude.is_finite() || level <= 0.0 {
        return Err(Error::Numerical("baseline fit produced a non-positive level".into()));
    }
    Ok(BaselineFit {
        amplitude,
        timescale: tb,
        baseline: 1.0 + amplitude,
        level,
        normalization: level * (1.0 + amplitude),
        residual,
    })
}
