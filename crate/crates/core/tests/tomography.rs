use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fluoro::params::{DELAY_NOMINAL_S, S0_WEAK};
use fluoro::tomography::{
    bootstrap, measured_records, mle_fit, sigma_zz_weak_model, synthetic_records, with_sigma_zz, DensityMatrix4,
    FitConfig, MeasurementRecord, ResampleNoise,
};
use fluoro::{EmitterParams, C64};

const ALL_BASES: [&str; 9] = ["xx", "xy", "xz", "yx", "yy", "yz", "zx", "zy", "zz"];

fn paper_records() -> Vec<MeasurementRecord> {
    let zz = sigma_zz_weak_model(&EmitterParams::reference(S0_WEAK), DELAY_NOMINAL_S, 10e-9, 1e-11).unwrap();
    with_sigma_zz(&measured_records(), zz).unwrap()
}

/// `(U ⊗ I)(|s,l⟩ + |l,s⟩)/√2` for a random unitary `U`. Correlation records
/// alone fix such states, since their local Bloch vectors vanish.
fn random_maximally_entangled(rng: &mut ChaCha8Rng) -> [C64; 4] {
    let (a, b) = (
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
    );
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let (a, b) = (a / n, b / n);
    // U = [[a, −b*], [b, a*]] applied to side A of (|0,1⟩ + |1,0⟩)/√2
    let h = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    [-b.conj() * h, a * h, a.conj() * h, b * h]
}

#[test]
fn maximally_entangled_states_are_recovered_from_exact_records() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let psi = random_maximally_entangled(&mut rng);
        let target = DensityMatrix4::from_pure(psi);
        let recs = synthetic_records(&target, &ALL_BASES, 1_000_000).unwrap();
        let fit = mle_fit(&recs, None, &FitConfig::default()).unwrap();
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        let v = nalgebra::Vector4::from(psi) / C64::from(norm.sqrt());
        let overlap = (v.adjoint() * fit.rho.0 * v)[(0, 0)].re;
        assert!(overlap >= 0.999, "state fidelity {overlap}");
    }
}

#[test]
fn bootstrap_spread_shrinks_with_counts() {
    let cfg = FitConfig::default();
    let base = paper_records();
    let doubled: Vec<_> = base.iter().map(|r| MeasurementRecord { n: 2 * r.n, ..*r }).collect();
    let a = bootstrap(&base, &cfg, 100, 3, ResampleNoise::Poisson).unwrap();
    let b = bootstrap(&doubled, &cfg, 100, 3, ResampleNoise::Poisson).unwrap();
    let ratio = a.sigma_fidelity / b.sigma_fidelity;
    assert!((1.1..=1.8).contains(&ratio), "σ_F ratio {ratio} ({a:?} vs {b:?})");
}

#[test]
fn bootstrap_is_reproducible() {
    let cfg = FitConfig::default();
    let a = bootstrap(&paper_records(), &cfg, 10, 42, ResampleNoise::Poisson).unwrap();
    let b = bootstrap(&paper_records(), &cfg, 10, 42, ResampleNoise::Poisson).unwrap();
    assert_eq!(a, b);
}

#[test]
fn records_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("records.json");
    std::fs::write(&path, serde_json::to_string_pretty(&measured_records()).unwrap()).unwrap();
    let back: Vec<MeasurementRecord> = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, measured_records());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"N\": 112"));
}
