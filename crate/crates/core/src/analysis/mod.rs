//! Reductions of detection records: coincidences, g² histograms, baseline
//! fits, Pauli expectations, CHSH and window scans.

mod coincidence;
mod estimators;
mod histogram;
mod pipeline;
mod report;
mod scan;
pub mod stats;

pub use coincidence::{joint_counts, pair_coincidences, Coincidence, CoincidenceSet, JointCounts};
pub use estimators::{
    chsh_from_counts, chsh_s, expectation_from_counts, expectation_joint, expectation_single, ChshResult, ChshSettings,
    Estimate, CHSH_SIGNS,
};
pub use histogram::{fit_baseline, g2_histogram, BaselineFit, CoincidenceHistogram};
pub use pipeline::{run_chsh, ChshExperiment, ChshRun};
pub use report::ChshReport;
pub use scan::{
    bell_threshold_g2, bell_violation_threshold, s_vs_window_scan, s_vs_window_simulated, ExactWindow, FormulaWindow,
    ScanResult, WindowModel,
};
