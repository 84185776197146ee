//! Beamsplitter plus two unbalanced Mach-Zehnder interferometers (a Franson
//! setup), simulated photon by photon.
//!
//! Each side sends a photon through a short or a long arm (delay `Δt`, phase
//! `φ`) and recombines on an output splitter with ports 1 (value +1) and 2
//! (value −1). The field reaching port `±` of side A is
//! `½[σ⁻(t) ± e^{iφ_A} σ⁻(t − Δt_A)]`.

mod pairs;
mod sampler;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::io::first_decreasing;
use crate::{Error, Result};

pub use pairs::{
    distribution_from_matrix, pair_matrix, two_photon_outcome_distribution, PairTable, TwoPhotonOutcomeDistribution,
};
pub use sampler::{simulate_franson, single_photon_outcome, split_to_alice_bob, Arm, FransonSimulator};

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometerConfig {
    pub delay_a: f64,
    pub delay_b: f64,
    pub phase_a: f64,
    pub phase_b: f64,
    pub splitter_ratio: f64,
    /// Measure phases from the coherent-light fringe maximum of each side
    /// rather than from the raw path phase.
    #[serde(default = "default_true")]
    pub lock_to_fringe: bool,
}

impl InterferometerConfig {
    pub fn new(delay_a: f64, delay_b: f64) -> Self {
        InterferometerConfig { delay_a, delay_b, phase_a: 0.0, phase_b: 0.0, splitter_ratio: 0.5, lock_to_fringe: true }
    }

    pub fn with_phases(self, phase_a: f64, phase_b: f64) -> Self {
        InterferometerConfig { phase_a, phase_b, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delay_a > 0.0) || !(self.delay_b > 0.0) {
            return Err(Error::param("interferometer delays must be > 0"));
        }
        if !(self.splitter_ratio > 0.0 && self.splitter_ratio < 1.0) {
            return Err(Error::param(format!("splitter ratio must lie in (0, 1), got {}", self.splitter_ratio)));
        }
        if !self.phase_a.is_finite() || !self.phase_b.is_finite() {
            return Err(Error::param("phases must be finite"));
        }
        let mismatch = (self.delay_a - self.delay_b).abs();
        if mismatch > 0.05 * self.delay_a.min(self.delay_b) {
            log::warn!("interferometer delays differ by {mismatch:e} s; Bell analysis assumes matched delays");
        }
        Ok(())
    }

    /// Detection-delay offset `t_A − t_B` at which the short–long and
    /// long–short coincidence contributions are balanced.
    pub fn bell_center(&self) -> f64 {
        0.5 * (self.delay_b - self.delay_a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::A => "A",
            Side::B => "B",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub time: f64,
    pub side: Side,
    /// 1 or 2.
    pub port: u8,
}

impl DetectionEvent {
    /// +1 for port 1, −1 for port 2.
    pub fn value(&self) -> i8 {
        if self.port == 1 {
            1
        } else {
            -1
        }
    }

    /// Channel index in the binary layout: A1, A2, B1, B2 → 0..4.
    pub fn channel(&self) -> usize {
        let base = match self.side {
            Side::A => 0,
            Side::B => 2,
        };
        base + (self.port as usize - 1)
    }
}

pub const CHANNEL_NAMES: [&str; 4] = ["A1", "A2", "B1", "B2"];

/// Timestamps of one side and port, in event order.
pub fn port_times(events: &[DetectionEvent], side: Side, port: u8) -> Vec<f64> {
    events.iter().filter(|e| e.side == side && e.port == port).map(|e| e.time).collect()
}

/// Splits events into the four binary channels.
pub fn events_to_channels(events: &[DetectionEvent]) -> [Vec<f64>; 4] {
    let mut out: [Vec<f64>; 4] = Default::default();
    for e in events {
        out[e.channel()].push(e.time);
    }
    out
}

/// Rebuilds a time-ordered event list from the four binary channels.
pub fn events_from_channels(channels: &[Vec<f64>; 4]) -> Result<Vec<DetectionEvent>> {
    let mut events = Vec::new();
    for (c, times) in channels.iter().enumerate() {
        if let Some(index) = first_decreasing(times) {
            return Err(Error::Unsorted { index });
        }
        let side = if c < 2 { Side::A } else { Side::B };
        let port = (c % 2) as u8 + 1;
        events.extend(times.iter().map(|&time| DetectionEvent { time, side, port }));
    }
    sort_events(&mut events);
    Ok(events)
}

pub(crate) fn sort_events(events: &mut [DetectionEvent]) {
    events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.side.cmp(&b.side)).then(a.port.cmp(&b.port)));
}

pub fn write_events_csv<W: Write>(mut w: W, events: &[DetectionEvent]) -> Result<()> {
    writeln!(w, "time_s,side,port")?;
    for e in events {
        writeln!(w, "{:e},{},{}", e.time, e.side.as_str(), e.port)?;
    }
    Ok(())
}

pub fn read_events_csv<R: BufRead>(r: R) -> Result<Vec<DetectionEvent>> {
    let mut lines = r.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == "time_s,side,port" => {}
        _ => return Err(Error::Format("expected header `time_s,side,port`".into())),
    }
    let mut events = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Format(format!("line {}: malformed event `{line}`", n + 2));
        let mut cols = line.split(',');
        let time: f64 = cols.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        let side = match cols.next().map(str::trim) {
            Some("A") => Side::A,
            Some("B") => Side::B,
            _ => return Err(bad()),
        };
        let port = match cols.next().map(str::trim) {
            Some("1") => 1,
            Some("2") => 2,
            _ => return Err(bad()),
        };
        if cols.next().is_some() {
            return Err(bad());
        }
        events.push(DetectionEvent { time, side, port });
    }
    Ok(events)
}
