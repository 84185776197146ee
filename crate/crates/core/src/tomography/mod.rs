//! Maximum-likelihood reconstruction of the two-photon time-bin state.
//!
//! Basis order is `|s,s⟩, |s,l⟩, |l,s⟩, |l,l⟩` with Alice's qubit first;
//! the early bin `s` is the `+1` eigenstate of `σ_z`.

mod bfgs;
mod fit;
mod likelihood;
mod state;
mod zz;

pub use bfgs::{minimize, Minimum, OptimizerSettings};
pub use fit::{
    bootstrap, mle_fit, resample_records, synthetic_records, BootstrapSummary, FitConfig, FitDiagnostics,
    ResampleNoise, TomographyResult, ZeroCorrelation,
};
pub use likelihood::{informative_records, log_likelihood, BasisPair, MeasurementRecord, Objective, PROBABILITY_FLOOR};
pub use state::{
    correlation_matrix, fidelity, horodecki_chsh, pauli_product, povm_element, rho_from_t, DensityMatrix4, Pauli,
    TriangularParams, BASIS,
};
pub use zz::{sigma_zz_from_g2, sigma_zz_weak_model};

use serde::Serialize;

/// The four correlations measured in the experiment, `(basis, E, N)`.
pub const MEASURED_CORRELATIONS: [(&str, f64, u64); 4] =
    [("xx", 0.679, 112), ("xy", 0.018, 110), ("yx", 0.083, 133), ("yy", 0.928, 138)];

pub fn measured_records() -> Vec<MeasurementRecord> {
    MEASURED_CORRELATIONS.iter().map(|&(b, e, n)| MeasurementRecord::new(b, e, n).expect("fixture is valid")).collect()
}

/// Appends a `zz` record carrying the mean count of the measured records.
pub fn with_sigma_zz(records: &[MeasurementRecord], zz: f64) -> crate::Result<Vec<MeasurementRecord>> {
    let measured: Vec<_> = records.iter().filter(|r| !r.pseudo).collect();
    let n = if measured.is_empty() {
        0
    } else {
        (measured.iter().map(|r| r.n as f64).sum::<f64>() / measured.len() as f64).round() as u64
    };
    let mut out = records.to_vec();
    out.push(MeasurementRecord::new("zz", zz, n)?);
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct TomographyReport {
    pub schema_version: u32,
    pub basis: [&'static str; 4],
    pub rho: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "F")]
    pub fidelity: f64,
    #[serde(rename = "S_F")]
    pub horodecki_s: f64,
    #[serde(rename = "sigma_F")]
    pub sigma_fidelity: Option<f64>,
    #[serde(rename = "sigma_S_F")]
    pub sigma_horodecki: Option<f64>,
    pub sigma_zz: Option<f64>,
    pub records: Vec<MeasurementRecord>,
    pub zero_correlation: ZeroCorrelation,
    pub bootstrap: Option<BootstrapSummary>,
    pub diagnostics: FitDiagnostics,
}

impl TomographyReport {
    pub fn new(
        result: &TomographyResult,
        records: &[MeasurementRecord],
        sigma_zz: Option<f64>,
        config: &FitConfig,
        boot: Option<BootstrapSummary>,
    ) -> Self {
        TomographyReport {
            schema_version: crate::SCHEMA_VERSION,
            basis: BASIS,
            rho: result.rho.to_nested(),
            fidelity: result.fidelity,
            horodecki_s: result.horodecki_s,
            sigma_fidelity: boot.map(|b| b.sigma_fidelity).or(result.sigma_fidelity),
            sigma_horodecki: boot.map(|b| b.sigma_horodecki).or(result.sigma_horodecki),
            sigma_zz,
            records: records.to_vec(),
            zero_correlation: config.zero_correlation,
            bootstrap: boot,
            diagnostics: result.diagnostics,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{DELAY_NOMINAL_S, S0_WEAK};
    use crate::EmitterParams;

    fn bell_records() -> Vec<MeasurementRecord> {
        [("xx", 1.0), ("yy", 1.0), ("xy", 0.0), ("yx", 0.0), ("zz", -1.0)]
            .iter()
            .map(|&(b, e)| MeasurementRecord::new(b, e, 10_000).unwrap())
            .collect()
    }

    fn paper_records() -> Vec<MeasurementRecord> {
        let zz = sigma_zz_weak_model(&EmitterParams::reference(S0_WEAK), DELAY_NOMINAL_S, 10e-9, 1e-11).unwrap();
        with_sigma_zz(&measured_records(), zz).unwrap()
    }

    #[test]
    fn ideal_bell_recovered() {
        let fit = mle_fit(&bell_records(), None, &FitConfig::default()).unwrap();
        assert!(fit.fidelity >= 0.999, "{}", fit.fidelity);
        fit.rho.validate(1e-10).unwrap();
    }

    #[test]
    fn zero_expectations_give_mixed_state() {
        let recs: Vec<_> =
            ["xx", "xy", "yx", "yy", "zz"].iter().map(|b| MeasurementRecord::new(b, 0.0, 500).unwrap()).collect();
        let fit = mle_fit(&recs, None, &FitConfig::default()).unwrap();
        assert!((fit.fidelity - 0.25).abs() < 1e-3, "{}", fit.fidelity);
    }

    #[test]
    fn too_few_records() {
        let recs = vec![MeasurementRecord::new("xx", 0.5, 10).unwrap()];
        let cfg = FitConfig { zero_correlation: ZeroCorrelation::PostHoc, ..Default::default() };
        assert!(mle_fit(&recs, None, &cfg).is_err());
    }

    #[test]
    fn measured_correlations_reconstruction() {
        let recs = paper_records();
        assert_eq!(recs[4].n, 123);
        let fit = mle_fit(&recs, None, &FitConfig::default()).unwrap();
        assert!(fit.diagnostics.converged);
        assert!((0.84..=0.90).contains(&fit.fidelity), "F = {}", fit.fidelity);
        assert!((2.49..=2.65).contains(&fit.horodecki_s), "S = {}", fit.horodecki_s);
        let ll = log_likelihood(&fit.rho, &with_zero(&recs));
        assert!(ll > log_likelihood(&DensityMatrix4::maximally_mixed(), &with_zero(&recs)));
    }

    fn with_zero(recs: &[MeasurementRecord]) -> Vec<MeasurementRecord> {
        let mut v = recs.to_vec();
        v.push(MeasurementRecord::pseudo("zx", 0.0, 10_000).unwrap());
        v.push(MeasurementRecord::pseudo("zy", 0.0, 10_000).unwrap());
        v
    }

    #[test]
    fn post_hoc_mode_zeroes_components() {
        let cfg = FitConfig { zero_correlation: ZeroCorrelation::PostHoc, ..Default::default() };
        let fit = mle_fit(&paper_records(), None, &cfg).unwrap();
        assert!(fit.rho.correlation(Pauli::Z, Pauli::X).abs() < 1e-12);
        assert!(fit.rho.correlation(Pauli::Z, Pauli::Y).abs() < 1e-12);
    }

    #[test]
    fn fit_is_deterministic() {
        let a = mle_fit(&paper_records(), None, &FitConfig::default()).unwrap();
        let b = mle_fit(&paper_records(), None, &FitConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_bootstrap_has_zero_spread() {
        let cfg = FitConfig::default();
        let b = bootstrap(&paper_records(), &cfg, 4, 1, ResampleNoise::None).unwrap();
        assert!(b.sigma_fidelity < 1e-6 && b.sigma_horodecki < 1e-6, "{b:?}");
        assert!(bootstrap(&paper_records(), &cfg, 1, 1, ResampleNoise::Poisson).is_err());
    }

    #[test]
    fn report_json_shape() {
        let cfg = FitConfig::default();
        let fit = mle_fit(&bell_records(), None, &cfg).unwrap();
        let v = serde_json::to_value(TomographyReport::new(&fit, &bell_records(), None, &cfg, None)).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["rho"].as_array().unwrap().len(), 4);
        assert!(v["F"].as_f64().unwrap() > 0.999);
        assert_eq!(v["basis"][1], "sl");
    }
}
