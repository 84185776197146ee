//! Hybrid photon-by-photon sampler: isolated photons interfere alone, photons
//! with a partner on the other side inside the guard window are drawn jointly
//! from the pair correlation table.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::pairs::PairTable;
use super::{sort_events, DetectionEvent, InterferometerConfig, Side};
use crate::physics::Correlator;
use crate::rng::{substream, Stage};
use crate::trajectories::PhotonStream;
use crate::{EmitterParams, Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Arm {
    Short,
    Long,
}

/// Routes each photon to side A with probability `ratio`, otherwise to B.
pub fn split_to_alice_bob(stream: &PhotonStream, ratio: f64, seed: u64) -> Result<(PhotonStream, PhotonStream)> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::param(format!("splitter ratio must lie in [0, 1], got {ratio}")));
    }
    let mut rng = substream(seed, Stage::Split, 0);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for &t in &stream.times {
        if rng.random::<f64>() < ratio {
            a.push(t);
        } else {
            b.push(t);
        }
    }
    Ok((PhotonStream { times: a, label: "A".into() }, PhotonStream { times: b, label: "B".into() }))
}

fn port_one_probability(phase: f64, coherence: C64) -> f64 {
    (0.5 * (1.0 + (C64::from_polar(1.0, phase) * coherence).re)).clamp(0.0, 1.0)
}

/// One photon through one interferometer. `coherence` is g¹(Δt)/g¹(0).
///
/// The arm is chosen with probability ½ (long arm adds `delay`), the port with
/// `P₁ = ½(1 + Re[e^{iφ} c])`.
pub fn single_photon_outcome(
    time: f64,
    side: Side,
    delay: f64,
    phase: f64,
    coherence: C64,
    rng: &mut impl Rng,
) -> Result<(DetectionEvent, Arm)> {
    if coherence.norm() > 1.0 + 1e-9 {
        return Err(Error::param(format!("|coherence| = {} exceeds 1", coherence.norm())));
    }
    let arm = if rng.random::<bool>() { Arm::Long } else { Arm::Short };
    let t = match arm {
        Arm::Short => time,
        Arm::Long => time + delay,
    };
    let port = if rng.random::<f64>() < port_one_probability(phase, coherence) { 1 } else { 2 };
    Ok((DetectionEvent { time: t, side, port }, arm))
}

/// Precomputed state for simulating many phase settings of one emitter and one
/// pair of interferometers.
#[derive(Debug, Clone)]
pub struct FransonSimulator {
    delay_a: f64,
    delay_b: f64,
    coherence_a: C64,
    coherence_b: C64,
    center: f64,
    guard: f64,
    table: PairTable,
}

/// Grid step of the pair table (s).
const TABLE_STEP: f64 = 0.05e-9;

impl FransonSimulator {
    /// Pairs are formed around the detection-delay `center` up to the guard
    /// window `5 × max(Δt_A, Δt_B)`.
    pub fn new(params: &EmitterParams, config: &InterferometerConfig, center: f64) -> Result<Self> {
        config.validate()?;
        let corr = Correlator::new(params)?;
        let guard = 5.0 * config.delay_a.max(config.delay_b);
        let step = TABLE_STEP.min(0.02 * params.lifetime());
        let table = PairTable::new(params, config.delay_a, config.delay_b, center - guard, center + guard, step)?;
        Ok(FransonSimulator {
            delay_a: config.delay_a,
            delay_b: config.delay_b,
            coherence_a: corr.coherence(config.delay_a),
            coherence_b: corr.coherence(config.delay_b),
            center,
            guard,
            table,
        })
    }

    pub fn guard(&self) -> f64 {
        self.guard
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn coherence(&self, side: Side) -> C64 {
        match side {
            Side::A => self.coherence_a,
            Side::B => self.coherence_b,
        }
    }

    /// Raw path phases for the requested settings, shifting by the coherence
    /// phase when phases are referenced to the fringe maximum.
    fn path_phases(&self, phase_a: f64, phase_b: f64, lock: bool) -> (f64, f64) {
        if lock {
            (phase_a - self.coherence_a.arg(), phase_b - self.coherence_b.arg())
        } else {
            (phase_a, phase_b)
        }
    }

    pub fn run(
        &self,
        a: &PhotonStream,
        b: &PhotonStream,
        phase_a: f64,
        phase_b: f64,
        lock_to_fringe: bool,
        seed: u64,
    ) -> Result<Vec<DetectionEvent>> {
        let (pa, pb) = self.path_phases(phase_a, phase_b, lock_to_fringe);
        let mut arm_rng = substream(seed, Stage::Franson, 0);
        let mut detect = |times: &[f64], delay: f64| -> Vec<f64> {
            let mut d: Vec<f64> = times.iter().map(|&t| if arm_rng.random::<bool>() { t + delay } else { t }).collect();
            d.sort_by(f64::total_cmp);
            d
        };
        let da = detect(&a.times, self.delay_a);
        let db = detect(&b.times, self.delay_b);

        // candidate pairs by distance from the window center
        let mut cand: Vec<(f64, usize, usize)> = Vec::new();
        let mut lo = 0;
        for (i, &ta) in da.iter().enumerate() {
            while lo < db.len() && ta - db[lo] - self.center > self.guard {
                lo += 1;
            }
            let mut j = lo;
            while j < db.len() && ta - db[j] - self.center >= -self.guard {
                cand.push(((ta - db[j] - self.center).abs(), i, j));
                j += 1;
            }
        }
        cand.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut used_a = vec![false; da.len()];
        let mut used_b = vec![false; db.len()];
        let mut pairs = Vec::new();
        for (_, i, j) in cand {
            if !used_a[i] && !used_b[j] {
                used_a[i] = true;
                used_b[j] = true;
                pairs.push((i, j));
            }
        }
        pairs.sort_unstable();

        let mut events = Vec::with_capacity(da.len() + db.len());
        let mut pair_rng = substream(seed, Stage::Franson, 1);
        for (i, j) in pairs {
            let delta = da[i] - db[j];
            let dist = match self.table.distribution(delta, pa, pb) {
                Some(d) => d?,
                None => {
                    used_a[i] = false;
                    used_b[j] = false;
                    continue;
                }
            };
            let u: f64 = pair_rng.random();
            let (ra, rb) = if u < dist.p[0][0] {
                (0, 0)
            } else if u < dist.p[0][0] + dist.p[0][1] {
                (0, 1)
            } else if u < dist.p[0][0] + dist.p[0][1] + dist.p[1][0] {
                (1, 0)
            } else {
                (1, 1)
            };
            events.push(DetectionEvent { time: da[i], side: Side::A, port: ra + 1 });
            events.push(DetectionEvent { time: db[j], side: Side::B, port: rb + 1 });
        }

        let mut single_rng = substream(seed, Stage::Franson, 2);
        let p1a = port_one_probability(pa, self.coherence_a);
        let p1b = port_one_probability(pb, self.coherence_b);
        for (times, used, side, p1) in [(&da, &used_a, Side::A, p1a), (&db, &used_b, Side::B, p1b)] {
            for (k, &t) in times.iter().enumerate() {
                if !used[k] {
                    let port = if single_rng.random::<f64>() < p1 { 1 } else { 2 };
                    events.push(DetectionEvent { time: t, side, port });
                }
            }
        }
        sort_events(&mut events);
        Ok(events)
    }
}

/// One-shot convenience wrapper around [`FransonSimulator`], pairing around
/// the balanced short–long offset of `config`.
pub fn simulate_franson(
    a: &PhotonStream,
    b: &PhotonStream,
    params: &EmitterParams,
    config: &InterferometerConfig,
    seed: u64,
) -> Result<Vec<DetectionEvent>> {
    if a.is_empty() && b.is_empty() {
        config.validate()?;
        return Ok(Vec::new());
    }
    let sim = FransonSimulator::new(params, config, config.bell_center())?;
    sim.run(a, b, config.phase_a, config.phase_b, config.lock_to_fringe, seed)
}
