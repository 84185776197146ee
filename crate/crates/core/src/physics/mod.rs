//! Single-emitter physics: Bloch equations, coherence functions and closed forms.

mod bloch;
mod closed_form;
mod correlation;

pub use bloch::{hamiltonian, lowering, raising, AtomState, Liouvillian};
pub use closed_form::{
    antibunching_window, g2_resonant_strong, g2_weak, joint_expectation_analytic, pair_rate, pair_rate_optimum,
    saturation, scattering_rates, separable_expectation, single_expectation, single_expectation_raw, smax_from_g2,
    two_photon_wavefunction, PairRateReport, ScatteringRates,
};
pub use correlation::{
    check_grid, fringe_rates, liouvillian_g1, liouvillian_g2, visibility, CorrelationCurve, Correlator, PropagatorCache,
};
