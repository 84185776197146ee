//! Experiment configuration file. Every section and key is optional; the
//! defaults reproduce the reference experiment.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fluoro::analysis::ChshSettings;
use fluoro::franson::InterferometerConfig;
use fluoro::params::{self, gamma_from_lifetime};
use fluoro::tomography::{FitConfig, OptimizerSettings, ZeroCorrelation};
use fluoro::trajectories::{Bunching, DutyCycle, TrajectoryConfig};
use fluoro::EmitterParams;

use crate::error::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub emitter: EmitterSection,
    #[serde(default)]
    pub trajectory: TrajectorySection,
    #[serde(default)]
    pub interferometer: InterferometerSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub tomography: TomographySection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterSection {
    /// Half the population decay rate. Alternative to `lifetime_s`.
    pub gamma_rad_per_s: Option<f64>,
    pub lifetime_s: Option<f64>,
    pub detuning_rad_per_s: Option<f64>,
    /// On-resonance saturation Ω²/(2γ²). Alternative to `rabi_rad_per_s`.
    pub s0: Option<f64>,
    pub rabi_rad_per_s: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub duration_s: Option<f64>,
    pub seed: Option<u64>,
    pub efficiency: Option<f64>,
    pub detuning_jitter_rad_per_s: Option<f64>,
    pub bunching_amplitude: Option<f64>,
    pub bunching_timescale_s: Option<f64>,
    pub duty_drive_s: Option<f64>,
    pub duty_dead_s: Option<f64>,
    pub run_length_s: Option<f64>,
    pub background_rate_per_s: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferometerSection {
    pub delay_a_s: Option<f64>,
    pub delay_b_s: Option<f64>,
    pub phase_a_rad: Option<f64>,
    pub phase_b_rad: Option<f64>,
    pub splitter_ratio: Option<f64>,
    pub lock_to_fringe: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    #[default]
    Exact,
    Formula,
    FormulaRescaled,
}

impl ScanMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScanMode::Exact => "exact",
            ScanMode::Formula => "formula",
            ScanMode::FormulaRescaled => "formula_rescaled",
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Coincidence window half width δt; defaults to 10 ns below s₀ = 1 and 3 ns above.
    pub half_width_s: Option<f64>,
    /// Detection-delay center of the window; defaults to (Δt_B − Δt_A)/2.
    pub center_s: Option<f64>,
    pub bin_width_s: Option<f64>,
    pub histogram_span_s: Option<f64>,
    pub tau_max_s: Option<f64>,
    pub tau_points: Option<usize>,
    pub window_min_s: Option<f64>,
    pub window_max_s: Option<f64>,
    pub window_step_s: Option<f64>,
    pub scan_mode: Option<ScanMode>,
    pub phi_a_rad: Option<f64>,
    pub phi_a_prime_rad: Option<f64>,
    pub phi_b_rad: Option<f64>,
    pub phi_b_prime_rad: Option<f64>,
    pub s0_grid: Option<Vec<f64>>,
    /// Interferometer delay used for the visibility curve.
    pub visibility_delay_s: Option<f64>,
    pub write_events: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroMode {
    #[default]
    PseudoRecords,
    PostHoc,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographySection {
    /// JSON records file, relative to the config file. Defaults to the bundled
    /// measured correlations.
    pub records_path: Option<PathBuf>,
    /// Generate the xx/xy/yx/yy records from a simulated acquisition instead.
    pub synthesize: Option<bool>,
    /// Overrides the model-derived ⟨σzσz⟩.
    pub sigma_zz: Option<f64>,
    pub sigma_zz_half_width_s: Option<f64>,
    pub sigma_zz_delay_s: Option<f64>,
    pub zero_correlation: Option<ZeroMode>,
    pub pseudo_records_n: Option<u64>,
    pub bootstrap_samples: Option<usize>,
    pub starts: Option<usize>,
    pub max_iterations: Option<usize>,
}

/// Fully resolved settings used by the commands.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub emitter: EmitterParams,
    pub trajectory: TrajectoryConfig,
    pub interferometer: InterferometerConfig,
    pub settings: ChshSettings,
    pub half_width: f64,
    pub center: f64,
    pub bin_width: f64,
    pub histogram_span: f64,
    pub tau_max: f64,
    pub tau_points: usize,
    pub windows: Vec<f64>,
    pub scan_mode: ScanMode,
    pub s0_grid: Vec<f64>,
    pub visibility_delay: f64,
    pub write_events: bool,
    pub tomography: TomographyResolved,
}

#[derive(Debug, Clone)]
pub struct TomographyResolved {
    pub records_path: Option<PathBuf>,
    pub synthesize: bool,
    pub sigma_zz: Option<f64>,
    pub sigma_zz_half_width: f64,
    pub sigma_zz_delay: f64,
    pub fit: FitConfig,
    pub bootstrap_samples: usize,
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn default_s0_grid() -> Vec<f64> {
    // log-spaced from 10⁻² to 10²
    (0..=80).map(|k| 10f64.powf(-2.0 + k as f64 / 20.0)).collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Resolves defaults and validates. `base` anchors relative paths.
    pub fn resolve(&self, seed: Option<u64>, base: &Path) -> Result<Resolved, CliError> {
        let e = &self.emitter;
        let gamma = match (e.gamma_rad_per_s, e.lifetime_s) {
            (Some(_), Some(_)) => return Err(CliError::Config("give gamma_rad_per_s or lifetime_s, not both".into())),
            (Some(g), None) => positive("gamma_rad_per_s", g)?,
            (None, Some(t)) => gamma_from_lifetime(positive("lifetime_s", t)?),
            (None, None) => gamma_from_lifetime(params::RB85_LIFETIME_S),
        };
        let delta = e.detuning_rad_per_s.unwrap_or(params::REFERENCE_DETUNING);
        let emitter = match (e.s0, e.rabi_rad_per_s) {
            (Some(_), Some(_)) => return Err(CliError::Config("give s0 or rabi_rad_per_s, not both".into())),
            (None, Some(w)) => EmitterParams::new(gamma, delta, w)?,
            (s0, None) => EmitterParams::from_s0(gamma, delta, s0.unwrap_or(params::S0_WEAK))?,
        };

        let t = &self.trajectory;
        let mut trajectory = TrajectoryConfig::new(emitter, t.duration_s.unwrap_or(1.0), seed.or(t.seed).unwrap_or(0));
        trajectory.efficiency = t.efficiency.unwrap_or(1.0);
        trajectory.detuning_jitter_sigma = t.detuning_jitter_rad_per_s.unwrap_or(0.0);
        trajectory.bunching = match (t.bunching_amplitude, t.bunching_timescale_s) {
            (None, None) => None,
            (Some(a), Some(tb)) => Some(Bunching { amplitude: a, timescale: tb }),
            _ => {
                return Err(CliError::Config("bunching needs both bunching_amplitude and bunching_timescale_s".into()))
            }
        };
        trajectory.duty_cycle = match (t.duty_drive_s, t.duty_dead_s) {
            (None, None) => None,
            (Some(drive), dead) => Some(DutyCycle { drive, dead: dead.unwrap_or(0.0) }),
            (None, Some(_)) => return Err(CliError::Config("duty_dead_s needs duty_drive_s".into())),
        };
        if let Some(r) = t.run_length_s {
            trajectory.run_length = r;
        }
        trajectory.background_rate = t.background_rate_per_s.unwrap_or(0.0);
        trajectory.validate()?;

        let i = &self.interferometer;
        let mut interferometer = InterferometerConfig::new(
            i.delay_a_s.unwrap_or(params::DELAY_A_S),
            i.delay_b_s.unwrap_or(params::DELAY_B_S),
        )
        .with_phases(i.phase_a_rad.unwrap_or(0.0), i.phase_b_rad.unwrap_or(0.0));
        if let Some(r) = i.splitter_ratio {
            interferometer.splitter_ratio = r;
        }
        if let Some(l) = i.lock_to_fringe {
            interferometer.lock_to_fringe = l;
        }
        interferometer.validate()?;

        let a = &self.analysis;
        let d = ChshSettings::default();
        let settings = ChshSettings {
            phi_a: a.phi_a_rad.unwrap_or(d.phi_a),
            phi_a_prime: a.phi_a_prime_rad.unwrap_or(d.phi_a_prime),
            phi_b: a.phi_b_rad.unwrap_or(d.phi_b),
            phi_b_prime: a.phi_b_prime_rad.unwrap_or(d.phi_b_prime),
        };
        let default_hw = if emitter.s0() < 1.0 { 10e-9 } else { 3e-9 };
        let half_width = positive("half_width_s", a.half_width_s.unwrap_or(default_hw))?;
        let center = a.center_s.unwrap_or_else(|| interferometer.bell_center());
        let window_min = positive("window_min_s", a.window_min_s.unwrap_or(0.5e-9))?;
        let window_max = positive("window_max_s", a.window_max_s.unwrap_or(50e-9))?;
        let window_step = positive("window_step_s", a.window_step_s.unwrap_or(0.5e-9))?;
        if window_max < window_min {
            return Err(CliError::Config("window_max_s must be >= window_min_s".into()));
        }
        let n = ((window_max - window_min) / window_step + 1e-9).floor() as usize;
        let windows = (0..=n).map(|k| window_min + k as f64 * window_step).collect();
        let s0_grid = a.s0_grid.clone().unwrap_or_else(default_s0_grid);
        if s0_grid.is_empty() || s0_grid.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(CliError::Config("s0_grid must be non-empty with positive entries".into()));
        }
        let tau_points = a.tau_points.unwrap_or(801);
        if tau_points < 2 {
            return Err(CliError::Config("tau_points must be >= 2".into()));
        }

        let tm = &self.tomography;
        let zero_correlation = match tm.zero_correlation.unwrap_or_default() {
            ZeroMode::PseudoRecords => ZeroCorrelation::PseudoRecords { n: tm.pseudo_records_n.unwrap_or(10_000) },
            ZeroMode::PostHoc => ZeroCorrelation::PostHoc,
        };
        let mut optimizer = OptimizerSettings::default();
        if let Some(m) = tm.max_iterations {
            optimizer.max_iterations = m;
        }
        let bootstrap_samples = tm.bootstrap_samples.unwrap_or(100);
        if bootstrap_samples == 1 {
            return Err(CliError::Config("bootstrap_samples must be 0 (off) or >= 2".into()));
        }
        if let Some(zz) = tm.sigma_zz {
            if !(zz.abs() <= 1.0) {
                return Err(CliError::Config(format!("sigma_zz must lie in [-1, 1], got {zz}")));
            }
        }
        let tomography = TomographyResolved {
            records_path: tm.records_path.as_ref().map(|p| base.join(p)),
            synthesize: tm.synthesize.unwrap_or(false),
            sigma_zz: tm.sigma_zz,
            sigma_zz_half_width: positive("sigma_zz_half_width_s", tm.sigma_zz_half_width_s.unwrap_or(10e-9))?,
            sigma_zz_delay: positive("sigma_zz_delay_s", tm.sigma_zz_delay_s.unwrap_or(params::DELAY_NOMINAL_S))?,
            fit: FitConfig { starts: tm.starts.unwrap_or(8), seed: trajectory.seed, optimizer, zero_correlation },
            bootstrap_samples,
        };

        Ok(Resolved {
            emitter,
            trajectory,
            interferometer,
            settings,
            half_width,
            center,
            bin_width: positive("bin_width_s", a.bin_width_s.unwrap_or(0.5e-9))?,
            histogram_span: positive("histogram_span_s", a.histogram_span_s.unwrap_or(100e-9))?,
            tau_max: positive("tau_max_s", a.tau_max_s.unwrap_or(100e-9))?,
            tau_points,
            windows,
            scan_mode: a.scan_mode.unwrap_or_default(),
            s0_grid,
            visibility_delay: positive("visibility_delay_s", a.visibility_delay_s.unwrap_or(params::DELAY_NOMINAL_S))?,
            write_events: a.write_events.unwrap_or(false),
            tomography,
        })
    }
}

/// Phase that measures σ_x (0) or σ_y (π/2) on the locked fringe.
pub fn pauli_phase(y: bool) -> f64 {
    if y {
        PI / 2.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_reference_parameters() {
        let r = ExperimentConfig::parse("").unwrap().resolve(None, Path::new(".")).unwrap();
        assert_eq!(r.emitter, EmitterParams::reference(0.1));
        assert_eq!(r.interferometer.delay_a, 46.1e-9);
        assert_eq!(r.half_width, 10e-9);
        assert_eq!(r.windows.len(), 100);
    }

    #[test]
    fn strong_drive_defaults_to_short_window() {
        let r = ExperimentConfig::parse("[emitter]\ns0 = 2.75\n").unwrap().resolve(None, Path::new(".")).unwrap();
        assert_eq!(r.half_width, 3e-9);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::parse("[emitter]\ngamma = 1.0\n").is_err());
        assert!(ExperimentConfig::parse("[nonsense]\n").is_err());
    }

    #[test]
    fn conflicting_keys_rejected() {
        let c = ExperimentConfig::parse("[emitter]\ns0 = 1.0\nrabi_rad_per_s = 1e7\n").unwrap();
        assert!(matches!(c.resolve(None, Path::new(".")), Err(CliError::Config(_))));
        let c = ExperimentConfig::parse("[trajectory]\nduration_s = 0.0\n").unwrap();
        assert!(matches!(c.resolve(None, Path::new(".")), Err(CliError::Config(_))));
    }

    #[test]
    fn seed_flag_overrides_file() {
        let c = ExperimentConfig::parse("[trajectory]\nseed = 4\n").unwrap();
        assert_eq!(c.resolve(None, Path::new(".")).unwrap().trajectory.seed, 4);
        assert_eq!(c.resolve(Some(9), Path::new(".")).unwrap().trajectory.seed, 9);
    }
}
