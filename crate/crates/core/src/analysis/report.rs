use serde::{Deserialize, Serialize};

use super::coincidence::JointCounts;
use super::estimators::{ChshResult, ChshSettings, Estimate};
use super::scan::ScanResult;
use crate::{EmitterParams, SCHEMA_VERSION};

/// JSON record of a CHSH measurement and, optionally, its window scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshReport {
    pub schema_version: u32,
    pub params: EmitterParams,
    pub settings: ChshSettings,
    pub center_s: f64,
    pub half_width_s: f64,
    pub expectations: Vec<Estimate>,
    pub counts: Vec<JointCounts>,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "sigma_S")]
    pub sigma_s: f64,
    pub windows: Vec<f64>,
    #[serde(rename = "S_of_window")]
    pub s_of_window: Vec<f64>,
    pub scan_mode: Option<String>,
}

impl ChshReport {
    pub fn new(
        params: EmitterParams,
        settings: ChshSettings,
        center: f64,
        half_width: f64,
        result: &ChshResult,
        scan: Option<&ScanResult>,
    ) -> Self {
        ChshReport {
            schema_version: SCHEMA_VERSION,
            params,
            settings,
            center_s: center,
            half_width_s: half_width,
            expectations: result.expectations.to_vec(),
            counts: result.counts.map(|c| c.to_vec()).unwrap_or_default(),
            s: result.s,
            sigma_s: result.sigma_s,
            windows: scan.map(|s| s.windows.clone()).unwrap_or_default(),
            s_of_window: scan.map(|s| s.s.clone()).unwrap_or_default(),
            scan_mode: scan.map(|s| s.mode.clone()),
        }
    }
}
