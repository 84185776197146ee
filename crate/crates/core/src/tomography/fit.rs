use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bfgs::{minimize, OptimizerSettings};
use super::likelihood::{informative_records, BasisPair, MeasurementRecord, Objective};
use super::state::{fidelity, horodecki_chsh, pauli_product, rho_from_t, DensityMatrix4, Pauli, TriangularParams};
use crate::rng::{child_seed, substream, Stage};
use crate::{Error, Result, C64};

/// How the unmeasurable `⟨σ_zσ_x⟩` and `⟨σ_zσ_y⟩` are fixed to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ZeroCorrelation {
    /// Add zero-valued records with `n` coincidences to the likelihood.
    PseudoRecords { n: u64 },
    /// Fit without them, then remove those Pauli components from ρ.
    PostHoc,
}

impl Default for ZeroCorrelation {
    fn default() -> Self {
        ZeroCorrelation::PseudoRecords { n: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub starts: usize,
    pub seed: u64,
    pub optimizer: OptimizerSettings,
    pub zero_correlation: ZeroCorrelation,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            starts: 8,
            seed: 0,
            optimizer: OptimizerSettings::default(),
            zero_correlation: ZeroCorrelation::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub negative_log_likelihood: f64,
    pub converged: bool,
    pub best_start: usize,
    pub starts: usize,
    pub records_used: usize,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyResult {
    pub rho: DensityMatrix4,
    pub params: TriangularParams,
    pub fidelity: f64,
    pub horodecki_s: f64,
    pub sigma_fidelity: Option<f64>,
    pub sigma_horodecki: Option<f64>,
    pub diagnostics: FitDiagnostics,
}

const ZERO_BASES: [BasisPair; 2] = [BasisPair(Pauli::Z, Pauli::X), BasisPair(Pauli::Z, Pauli::Y)];

fn with_zero_constraints(records: &[MeasurementRecord], mode: ZeroCorrelation) -> Vec<MeasurementRecord> {
    let mut out: Vec<MeasurementRecord> = records.to_vec();
    if let ZeroCorrelation::PseudoRecords { n } = mode {
        for b in ZERO_BASES {
            if !out.iter().any(|r| r.basis == b) {
                out.push(MeasurementRecord { basis: b, expectation: 0.0, n, pseudo: true });
            }
        }
    }
    out
}

fn random_start(seed: u64, index: u64) -> TriangularParams {
    let mut rng = substream(seed, Stage::MultiStart, index);
    let mut p = [0.0; 16];
    for v in p.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    TriangularParams(p)
}

/// Start points: `init` if given, the identity, a Bell-state Cholesky seed,
/// then random draws until `starts` points exist.
fn start_points(init: Option<TriangularParams>, starts: usize, seed: u64) -> Vec<TriangularParams> {
    let mut pts = Vec::with_capacity(starts + 1);
    pts.extend(init);
    let mut id = [0.0; 16];
    id[..4].copy_from_slice(&[1.0; 4]);
    pts.push(TriangularParams(id));
    pts.push(TriangularParams::from_rho(&DensityMatrix4::bell()).expect("Bell state factorises"));
    let mut k = 0;
    while pts.len() < starts.max(8) {
        pts.push(random_start(seed, k));
        k += 1;
    }
    pts
}

/// Maximum-likelihood density matrix over `ρ = T†T/Tr(T†T)` by multi-start
/// BFGS. The best start is returned; if it did not converge the diagnostics
/// say so and the best-so-far point is kept.
pub fn mle_fit(
    records: &[MeasurementRecord],
    init: Option<TriangularParams>,
    config: &FitConfig,
) -> Result<TomographyResult> {
    let recs = with_zero_constraints(&informative_records(records)?, config.zero_correlation);
    if recs.len() < 4 {
        return Err(Error::param(format!("need at least 4 informative records, got {}", recs.len())));
    }
    let obj = Objective::new(&recs);
    let pts = start_points(init, config.starts, config.seed);
    let fits: Vec<_> = pts
        .par_iter()
        .map(|p| minimize(|x| obj.value_and_gradient(&TriangularParams(*x)), p.0, &config.optimizer))
        .collect();
    let (best_start, best) = fits
        .iter()
        .enumerate()
        .filter(|(_, m)| m.value.is_finite())
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value))
        .ok_or_else(|| Error::Numerical("every start diverged".into()))?;
    if !best.converged {
        log::warn!("tomography fit stopped after {} iterations without converging", best.iterations);
    }
    let params = TriangularParams(best.x);
    let mut rho = rho_from_t(&params)?;
    if config.zero_correlation == ZeroCorrelation::PostHoc {
        for b in ZERO_BASES {
            let op = pauli_product(b.0, b.1);
            rho = DensityMatrix4(rho.0 - op * C64::from(0.25 * rho.expectation(&op)));
        }
    }
    let diagnostics = FitDiagnostics {
        iterations: best.iterations,
        negative_log_likelihood: best.value,
        converged: best.converged,
        best_start,
        starts: pts.len(),
        records_used: recs.len(),
        min_eigenvalue: rho.eigenvalues()[0],
    };
    Ok(TomographyResult {
        fidelity: fidelity(&rho),
        horodecki_s: horodecki_chsh(&rho),
        rho,
        params,
        sigma_fidelity: None,
        sigma_horodecki: None,
        diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleNoise {
    Poisson,
    /// Refit the unchanged records; useful as a degenerate check.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub sigma_fidelity: f64,
    pub sigma_horodecki: f64,
    pub mean_fidelity: f64,
    pub mean_horodecki: f64,
    pub samples: usize,
    pub excluded: usize,
}

/// Draws `n± ~ Poisson(N(1±E)/2)` for every measured record; pseudo-records
/// are kept as they are.
pub fn resample_records<R: Rng>(records: &[MeasurementRecord], rng: &mut R) -> Vec<MeasurementRecord> {
    let mut draw = |mean: f64| -> u64 {
        if mean > 0.0 {
            Poisson::new(mean).expect("positive mean").sample(rng) as u64
        } else {
            0
        }
    };
    records
        .iter()
        .map(|r| {
            if r.pseudo {
                return *r;
            }
            let (np, nm) = r.outcome_counts();
            let (a, b) = (draw(np), draw(nm));
            let n = a + b;
            let expectation = if n > 0 { (a as f64 - b as f64) / n as f64 } else { 0.0 };
            MeasurementRecord { expectation, n, ..*r }
        })
        .collect()
}

fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Spread of F and S_F over refits of resampled records. A resample whose
/// fit does not converge is redrawn up to three times, then excluded.
pub fn bootstrap(
    records: &[MeasurementRecord],
    config: &FitConfig,
    n_samples: usize,
    seed: u64,
    noise: ResampleNoise,
) -> Result<BootstrapSummary> {
    if n_samples < 2 {
        return Err(Error::param("bootstrap needs at least 2 samples"));
    }
    let outcomes: Vec<Result<Option<(f64, f64)>>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| {
            for attempt in 0..4u64 {
                let mut rng = substream(seed, Stage::Bootstrap, k | (attempt << 32));
                let recs = match noise {
                    ResampleNoise::Poisson => resample_records(records, &mut rng),
                    ResampleNoise::None => records.to_vec(),
                };
                let cfg = FitConfig { seed: child_seed(seed, Stage::Bootstrap, k), ..*config };
                let fit = match mle_fit(&recs, None, &cfg) {
                    Ok(f) => f,
                    Err(Error::InvalidParameter(_)) if noise == ResampleNoise::Poisson => continue,
                    Err(e) => return Err(e),
                };
                if fit.diagnostics.converged {
                    return Ok(Some((fit.fidelity, fit.horodecki_s)));
                }
            }
            Ok(None)
        })
        .collect();
    let mut f = Vec::new();
    let mut s = Vec::new();
    let mut excluded = 0;
    for o in outcomes {
        match o? {
            Some((a, b)) => {
                f.push(a);
                s.push(b);
            }
            None => excluded += 1,
        }
    }
    if excluded > 0 {
        log::warn!("{excluded} bootstrap resamples excluded after repeated non-convergence");
    }
    if f.len() < 2 {
        return Err(Error::NonConvergence { iterations: config.optimizer.max_iterations });
    }
    Ok(BootstrapSummary {
        sigma_fidelity: std_dev(&f),
        sigma_horodecki: std_dev(&s),
        mean_fidelity: f.iter().sum::<f64>() / f.len() as f64,
        mean_horodecki: s.iter().sum::<f64>() / s.len() as f64,
        samples: f.len(),
        excluded,
    })
}

/// Records with the exact expectations of `rho` in the given bases.
pub fn synthetic_records(rho: &DensityMatrix4, bases: &[&str], n: u64) -> Result<Vec<MeasurementRecord>> {
    bases
        .iter()
        .map(|b| {
            let basis: BasisPair = b.parse()?;
            let e = rho.correlation(basis.0, basis.1).clamp(-1.0, 1.0);
            Ok(MeasurementRecord { basis, expectation: e, n, pseudo: false })
        })
        .collect()
}
