use std::f64::consts::{PI, SQRT_2};

use proptest::prelude::*;

use fluoro::analysis::{chsh_from_counts, g2_histogram, pair_coincidences, JointCounts};
use fluoro::franson::two_photon_outcome_distribution;
use fluoro::physics::two_photon_wavefunction;
use fluoro::tomography::{
    horodecki_chsh, log_likelihood, rho_from_t, BasisPair, DensityMatrix4, MeasurementRecord, Pauli, TriangularParams,
};
use fluoro::{EmitterParams, C64};

fn params() -> impl Strategy<Value = TriangularParams> {
    prop::array::uniform16(-2.0f64..2.0)
        .prop_filter("not all zero", |p| p.iter().any(|v| v.abs() > 1e-3))
        .prop_map(TriangularParams)
}

fn pauli() -> impl Strategy<Value = Pauli> {
    prop_oneof![Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)]
}

fn sorted_times(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(0u32..100_000, 0..max).prop_map(|s| s.into_iter().map(|k| k as f64 * 1e-9).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn triangular_params_give_valid_states(p in params()) {
        let rho = rho_from_t(&p).unwrap();
        prop_assert!(rho.validate(1e-10).is_ok());
        let f = fluoro::tomography::fidelity(&rho);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
    }

    #[test]
    fn horodecki_value_respects_tsirelson(p in params()) {
        let s = horodecki_chsh(&rho_from_t(&p).unwrap());
        prop_assert!((0.0..=2.0 * SQRT_2 + 1e-9).contains(&s));
    }

    #[test]
    fn bell_diagonal_states_reach_analytic_optimum(w in prop::array::uniform4(0.0f64..1.0)) {
        // mixtures of the four Bell states have correlations diag(c1, c2, c3)
        let tot: f64 = w.iter().sum::<f64>() + 1e-9;
        let q = w.map(|x| x / tot);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = 0.0;
        let bells = [[h, z, z, h], [h, z, z, -h], [z, h, h, z], [z, h, -h, z]];
        let mut m = nalgebra::Matrix4::<C64>::zeros();
        for (k, b) in bells.iter().enumerate() {
            m += DensityMatrix4::from_pure(b.map(C64::from)).0 * C64::from(q[k]);
        }
        let rho = DensityMatrix4(m);
        let mut c: Vec<f64> = Pauli::ALL.iter().map(|&i| rho.correlation(i, i).powi(2)).collect();
        c.sort_by(|a, b| b.total_cmp(a));
        prop_assert!((horodecki_chsh(&rho) - 2.0 * (c[0] + c[1]).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn likelihood_invariant_under_outcome_relabelling(
        p in params(), i in pauli(), j in pauli(), e in -1.0f64..1.0, n in 1u64..10_000,
    ) {
        // conjugating side A with a Pauli that anticommutes with σ_i flips ⟨σ_iσ_j⟩
        let flip = match i { Pauli::X => Pauli::Z, _ => Pauli::X };
        let rho = rho_from_t(&p).unwrap();
        let f = flip.matrix().kronecker(&nalgebra::Matrix2::<C64>::identity());
        let flipped = DensityMatrix4(f * rho.0 * f);
        let r = MeasurementRecord { basis: BasisPair(i, j), expectation: e, n, pseudo: false };
        let swapped = MeasurementRecord { expectation: -e, ..r };
        let a = log_likelihood(&rho, &[r]);
        let b = log_likelihood(&flipped, &[swapped]);
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn franson_distributions_are_normalised_and_no_signalling(
        s0 in 1e-3f64..0.5, detuning in -3.0f64..3.0, delta in -80e-9f64..80e-9,
        da in 20e-9f64..60e-9, db in 20e-9f64..60e-9,
        pa in 0.0f64..2.0 * PI, pb in 0.0f64..2.0 * PI, pb2 in 0.0f64..2.0 * PI,
    ) {
        let base = EmitterParams::reference(s0);
        let p = base.with_delta(detuning * base.gamma);
        let psi = |t: f64| two_photon_wavefunction(&p, t);
        let d1 = two_photon_outcome_distribution(delta, da, db, pa, pb, psi).unwrap();
        let d2 = two_photon_outcome_distribution(delta, da, db, pa, pb2, psi).unwrap();
        prop_assert!((d1.total() - 1.0).abs() <= 1e-12);
        prop_assert!(d1.p.iter().flatten().all(|&x| x >= 0.0));
        for k in 0..2 {
            prop_assert!((d1.marginal_a()[k] - d2.marginal_a()[k]).abs() <= 1e-12);
        }
    }

    #[test]
    fn pure_amplitude_chsh_respects_tsirelson(
        s0 in 1e-3f64..0.5, delta in -20e-9f64..20e-9, settings in prop::array::uniform4(0.0f64..2.0 * PI),
    ) {
        let p = EmitterParams::reference(s0);
        let psi = |t: f64| two_photon_wavefunction(&p, t);
        let pairs = [(settings[0], settings[2]), (settings[1], settings[2]), (settings[0], settings[3]), (settings[1], settings[3])];
        let e: Vec<f64> = pairs
            .iter()
            .map(|&(a, b)| two_photon_outcome_distribution(delta, 46e-9, 46e-9, a, b, psi).unwrap().expectation())
            .collect();
        let s = (e[0] + e[1] - e[2] + e[3]).abs();
        prop_assert!(s <= 2.0 * SQRT_2 + 1e-12, "S = {}", s);
    }

    #[test]
    fn chsh_from_counts_is_bounded(n in prop::array::uniform16(0u64..1000)) {
        let counts: [JointCounts; 4] = std::array::from_fn(|k| JointCounts { n: [[n[4 * k] + 1, n[4 * k + 1]], [n[4 * k + 2], n[4 * k + 3]]] });
        let r = chsh_from_counts(counts).unwrap();
        prop_assert!(r.s <= 4.0 + 1e-12 && r.sigma_s >= 0.0);
    }

    #[test]
    fn pairing_uses_each_event_once(a in sorted_times(200), b in sorted_times(200), hw in 1e-9f64..50e-9) {
        let set = pair_coincidences(&a, &b, 0.0, hw).unwrap();
        let mut ia: Vec<usize> = set.pairs.iter().map(|c| c.index_a).collect();
        let mut ib: Vec<usize> = set.pairs.iter().map(|c| c.index_b).collect();
        ia.sort_unstable();
        ia.dedup();
        ib.sort_unstable();
        ib.dedup();
        prop_assert_eq!(ia.len(), set.len());
        prop_assert_eq!(ib.len(), set.len());
        prop_assert!(set.pairs.iter().all(|c| c.delay.abs() <= hw));
    }

    #[test]
    fn histogram_counts_every_pair_in_span(a in sorted_times(100), b in sorted_times(100)) {
        let span = 20e-6;
        let h = g2_histogram(&a, &b, 1e-6, span).unwrap();
        let brute = a.iter().flat_map(|&x| b.iter().map(move |&y| y - x)).filter(|d| (-span..span).contains(d)).count();
        prop_assert_eq!(h.counts.iter().sum::<u64>() as usize, brute);
    }
}
