//! End-to-end CHSH experiment: emission, splitting, interferometers, pairing.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coincidence::{joint_counts, JointCounts};
use super::estimators::{chsh_from_counts, ChshResult, ChshSettings};
use crate::franson::{split_to_alice_bob, DetectionEvent, FransonSimulator, InterferometerConfig};
use crate::rng::{child_seed, Stage};
use crate::trajectories::{simulate_detections, TrajectoryConfig};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshExperiment {
    /// Emitter and stream settings; `duration` applies to each phase setting.
    pub trajectory: TrajectoryConfig,
    pub interferometer: InterferometerConfig,
    pub settings: ChshSettings,
    /// Detection-delay center of the coincidence window; defaults to the
    /// balanced short–long offset.
    pub center: Option<f64>,
    pub half_width: f64,
}

#[derive(Debug, Clone)]
pub struct ChshRun {
    pub result: ChshResult,
    pub events: [Vec<DetectionEvent>; 4],
    pub center: f64,
}

/// Runs the four phase settings as independent acquisitions, each with its
/// own emission stream.
pub fn run_chsh(exp: &ChshExperiment) -> Result<ChshRun> {
    exp.trajectory.validate()?;
    exp.interferometer.validate()?;
    let center = exp.center.unwrap_or_else(|| exp.interferometer.bell_center());
    let sim = FransonSimulator::new(&exp.trajectory.emitter, &exp.interferometer, center)?;
    let seed = exp.trajectory.seed;
    let lock = exp.interferometer.lock_to_fringe;
    let runs: Vec<(Vec<DetectionEvent>, JointCounts)> = exp
        .settings
        .pairs()
        .par_iter()
        .enumerate()
        .map(|(k, &(pa, pb))| {
            let k = k as u64;
            let mut tc = exp.trajectory.clone();
            tc.seed = child_seed(seed, Stage::Emission, k);
            let stream = simulate_detections(&tc)?;
            let (a, b) =
                split_to_alice_bob(&stream, exp.interferometer.splitter_ratio, child_seed(seed, Stage::Split, k))?;
            let events = sim.run(&a, &b, pa, pb, lock, child_seed(seed, Stage::Franson, k))?;
            let counts = joint_counts(&events, center, exp.half_width)?;
            Ok((events, counts))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut it = runs.into_iter();
    let mut take = || it.next().expect("four settings");
    let (e0, c0) = take();
    let (e1, c1) = take();
    let (e2, c2) = take();
    let (e3, c3) = take();
    let result = chsh_from_counts([c0, c1, c2, c3])?;
    Ok(ChshRun { result, events: [e0, e1, e2, e3], center })
}
