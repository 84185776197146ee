//! Quantum-jump Monte Carlo photon streams and the classical post-processing
//! applied to them: detection-efficiency thinning, per-run detuning jitter,
//! a slow bunching envelope and Poissonian background.

mod jump;

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::{first_unsorted, read_timestamps, write_timestamps};
use crate::physics::scattering_rates;
use crate::rng::{substream, Stage};
use crate::{EmitterParams, Error, Result};

pub use jump::WaitingTimeSampler;

/// Intensity modulation producing a long-delay g² baseline `1 + A e^{−|τ|/t_b}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bunching {
    pub amplitude: f64,
    pub timescale: f64,
}

/// Drive windows interleaved with dead time (e.g. cooling intervals).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DutyCycle {
    pub drive: f64,
    pub dead: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub emitter: EmitterParams,
    pub duration: f64,
    pub seed: u64,
    /// Overall detection efficiency applied by [`simulate_detections`].
    pub efficiency: f64,
    /// Standard deviation of the per-run detuning (rad/s).
    pub detuning_jitter_sigma: f64,
    pub bunching: Option<Bunching>,
    pub duty_cycle: Option<DutyCycle>,
    /// Length of an independent run when no duty cycle is set (s).
    pub run_length: f64,
    /// Poissonian background added after thinning (counts/s).
    pub background_rate: f64,
    /// Time resolution of the waiting-time root search (s).
    pub time_tolerance: f64,
}

impl TrajectoryConfig {
    pub fn new(emitter: EmitterParams, duration: f64, seed: u64) -> Self {
        TrajectoryConfig {
            emitter,
            duration,
            seed,
            efficiency: 1.0,
            detuning_jitter_sigma: 0.0,
            bunching: None,
            duty_cycle: None,
            run_length: 1e-3,
            background_rate: 0.0,
            time_tolerance: 1e-12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.emitter.validate()?;
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::param(format!("duration must be > 0, got {}", self.duration)));
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::param(format!("efficiency must lie in [0, 1], got {}", self.efficiency)));
        }
        if !(self.detuning_jitter_sigma >= 0.0) {
            return Err(Error::param("detuning jitter must be >= 0"));
        }
        if let Some(b) = self.bunching {
            if !(b.amplitude >= 0.0) || !(b.timescale > 0.0) {
                return Err(Error::param("bunching needs A >= 0 and t_b > 0"));
            }
        }
        if let Some(d) = self.duty_cycle {
            if !(d.drive > 0.0) || !(d.dead >= 0.0) {
                return Err(Error::param("duty cycle needs drive > 0 and dead >= 0"));
            }
        }
        if !(self.run_length > 0.0) {
            return Err(Error::param("run length must be > 0"));
        }
        if !(self.background_rate >= 0.0) {
            return Err(Error::param("background rate must be >= 0"));
        }
        if !(self.time_tolerance > 0.0) {
            return Err(Error::param("time tolerance must be > 0"));
        }
        Ok(())
    }

    /// `[start, end)` intervals simulated as independent runs.
    pub fn runs(&self) -> Vec<(f64, f64)> {
        let (len, period) = match self.duty_cycle {
            Some(d) => (d.drive, d.drive + d.dead),
            None => (self.run_length, self.run_length),
        };
        let mut out = Vec::new();
        let mut k = 0u64;
        loop {
            let start = k as f64 * period;
            if start >= self.duration {
                break;
            }
            out.push((start, (start + len).min(self.duration)));
            k += 1;
        }
        out
    }
}

/// Strictly increasing detection timestamps of one channel.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PhotonStream {
    pub times: Vec<f64>,
    pub label: String,
}

impl PhotonStream {
    pub fn new(times: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if let Some(index) = first_unsorted(&times) {
            return Err(Error::Unsorted { index });
        }
        Ok(PhotonStream { times, label: label.into() })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn write_binary<W: Write>(&self, w: W) -> Result<()> {
        write_timestamps(w, &self.times)
    }

    pub fn read_binary<R: std::io::Read>(r: R, label: impl Into<String>) -> Result<Self> {
        Self::new(read_timestamps(r)?, label)
    }
}

/// Writes several channels into one time-ordered `time_s,channel` CSV.
pub fn write_streams_csv<W: Write>(mut w: W, streams: &[&PhotonStream]) -> Result<()> {
    let mut rows: Vec<(f64, usize)> =
        streams.iter().enumerate().flat_map(|(c, s)| s.times.iter().map(move |&t| (t, c))).collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    writeln!(w, "time_s,channel")?;
    for (t, c) in rows {
        writeln!(w, "{t:e},{}", streams[c].label)?;
    }
    Ok(())
}

/// Reads a `time_s,channel` CSV back into per-channel streams, in order of
/// first appearance.
pub fn read_streams_csv<R: BufRead>(r: R) -> Result<Vec<PhotonStream>> {
    let mut lines = r.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == "time_s,channel" => {}
        _ => return Err(Error::Format("expected header `time_s,channel`".into())),
    }
    let mut out: Vec<PhotonStream> = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (t, c) =
            line.split_once(',').ok_or_else(|| Error::Format(format!("line {}: expected two columns", n + 2)))?;
        let t: f64 = t.trim().parse().map_err(|e| Error::Format(format!("line {}: {e}", n + 2)))?;
        let c = c.trim();
        match out.iter_mut().find(|s| s.label == c) {
            Some(s) => s.times.push(t),
            None => out.push(PhotonStream { times: vec![t], label: c.to_string() }),
        }
    }
    for s in &out {
        if let Some(index) = first_unsorted(&s.times) {
            return Err(Error::Unsorted { index });
        }
    }
    Ok(out)
}

/// Per-run emitter parameters with Δ drawn from a Gaussian around the
/// configured detuning.
pub fn apply_detuning_jitter(config: &TrajectoryConfig, run_count: usize, seed: u64) -> Result<Vec<EmitterParams>> {
    if run_count == 0 {
        return Err(Error::param("run count must be >= 1"));
    }
    let p = config.emitter;
    let sigma = config.detuning_jitter_sigma;
    if sigma == 0.0 {
        return Ok(vec![p; run_count]);
    }
    let normal = Normal::new(p.delta, sigma).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = substream(seed, Stage::Jitter, 0);
    Ok((0..run_count).map(|_| p.with_delta(normal.sample(&mut rng))).collect())
}

fn simulate_run(sampler: &WaitingTimeSampler, start: f64, end: f64, burn_in: f64, rng: &mut impl Rng) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = start - burn_in;
    loop {
        let u = 1.0 - rng.random::<f64>();
        match sampler.sample(u, end - t) {
            Some(w) => {
                t += w;
                if t >= end {
                    break;
                }
                if t >= start {
                    out.push(t);
                }
            }
            None => break,
        }
    }
    out
}

/// Emission timestamps of the driven atom from quantum-jump Monte Carlo.
///
/// Each run is simulated independently on its own random substream, in
/// parallel, and concatenated in run order. Continuous runs start from a
/// burn-in of twenty mean waiting times so that every run is stationary; runs
/// of a duty cycle start with the atom in its ground state at the beginning of
/// the drive window.
pub fn simulate_emissions(config: &TrajectoryConfig) -> Result<PhotonStream> {
    config.validate()?;
    if config.emitter.rabi == 0.0 {
        return Ok(PhotonStream { times: Vec::new(), label: "emission".into() });
    }
    let runs = config.runs();
    let params = apply_detuning_jitter(config, runs.len(), config.seed)?;
    let shared =
        (config.detuning_jitter_sigma == 0.0).then(|| WaitingTimeSampler::new(&config.emitter, config.time_tolerance));
    let chunks: Vec<Vec<f64>> = runs
        .par_iter()
        .zip(params.par_iter())
        .enumerate()
        .map(|(i, (&(start, end), p))| {
            let own;
            let sampler = match &shared {
                Some(s) => s,
                None => {
                    own = WaitingTimeSampler::new(p, config.time_tolerance);
                    &own
                }
            };
            let burn = match config.duty_cycle {
                Some(_) => 0.0,
                None => {
                    let rate = scattering_rates(p).total;
                    if rate > 0.0 {
                        20.0 / rate
                    } else {
                        0.0
                    }
                }
            };
            let mut rng = substream(config.seed, Stage::Emission, i as u64);
            simulate_run(sampler, start, end, burn, &mut rng)
        })
        .collect();
    let times = chunks.concat();
    PhotonStream::new(times, "emission")
}

/// Keeps each event independently with probability `efficiency`.
pub fn thin(stream: &PhotonStream, efficiency: f64, seed: u64) -> Result<PhotonStream> {
    if !(0.0..=1.0).contains(&efficiency) {
        return Err(Error::param(format!("efficiency must lie in [0, 1], got {efficiency}")));
    }
    if efficiency == 1.0 {
        return Ok(stream.clone());
    }
    let mut rng = substream(seed, Stage::Thinning, 0);
    let times = stream.times.iter().copied().filter(|_| rng.random::<f64>() < efficiency).collect();
    Ok(PhotonStream { times, label: stream.label.clone() })
}

/// Two-state Markov intensity modulation whose normalised autocorrelation is
/// `1 + A e^{−|τ|/t_b}`.
///
/// For `A ≤ 1` the envelope switches symmetrically between full and reduced
/// transmission with depth `2√A/(1+√A)`; for `A > 1` it switches between on
/// and off with duty `1/(1+A)`. Either way the total switching rate is `1/t_b`.
pub fn apply_bunching_envelope(
    stream: &PhotonStream,
    amplitude: f64,
    timescale: f64,
    seed: u64,
) -> Result<PhotonStream> {
    if !(amplitude >= 0.0) || !(timescale > 0.0) {
        return Err(Error::param("bunching needs A >= 0 and t_b > 0"));
    }
    if amplitude == 0.0 || stream.is_empty() {
        return Ok(stream.clone());
    }
    let (p_bright, depth) = if amplitude <= 1.0 {
        let r = amplitude.sqrt();
        (0.5, 2.0 * r / (1.0 + r))
    } else {
        (1.0 / (1.0 + amplitude), 1.0)
    };
    let leave_bright = Exp::new((1.0 - p_bright) / timescale).map_err(|e| Error::param(e.to_string()))?;
    let leave_dim = Exp::new(p_bright / timescale).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = substream(seed, Stage::Bunching, 0);
    let mut bright = rng.random::<f64>() < p_bright;
    let start = stream.times[0];
    let mut switch_at = start + if bright { leave_bright.sample(&mut rng) } else { leave_dim.sample(&mut rng) };
    let mut times = Vec::with_capacity(stream.len());
    for &t in &stream.times {
        while t >= switch_at {
            bright = !bright;
            switch_at += if bright { leave_bright.sample(&mut rng) } else { leave_dim.sample(&mut rng) };
        }
        let keep = if bright { 1.0 } else { 1.0 - depth };
        if rng.random::<f64>() < keep {
            times.push(t);
        }
    }
    Ok(PhotonStream { times, label: stream.label.clone() })
}

/// Merges a homogeneous Poisson process of the given rate on `[0, duration)`.
pub fn add_background(stream: &PhotonStream, rate: f64, duration: f64, seed: u64) -> Result<PhotonStream> {
    if !(rate >= 0.0) || !(duration > 0.0) {
        return Err(Error::param("background needs rate >= 0 and duration > 0"));
    }
    if rate == 0.0 {
        return Ok(stream.clone());
    }
    let gap = Exp::new(rate).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = substream(seed, Stage::Synthetic, 0x6b67);
    let mut bg = Vec::new();
    let mut t = gap.sample(&mut rng);
    while t < duration {
        bg.push(t);
        t += gap.sample(&mut rng);
    }
    let mut times = Vec::with_capacity(stream.len() + bg.len());
    let (mut i, mut j) = (0, 0);
    while i < stream.len() || j < bg.len() {
        let take_stream = j >= bg.len() || (i < stream.len() && stream.times[i] <= bg[j]);
        let t = if take_stream {
            i += 1;
            stream.times[i - 1]
        } else {
            j += 1;
            bg[j - 1]
        };
        // a coincident background click is indistinguishable from the signal one
        if times.last().is_none_or(|&last| t > last) {
            times.push(t);
        }
    }
    Ok(PhotonStream { times, label: stream.label.clone() })
}

/// Emissions followed by the configured bunching envelope, efficiency thinning
/// and background.
pub fn simulate_detections(config: &TrajectoryConfig) -> Result<PhotonStream> {
    let mut s = simulate_emissions(config)?;
    if let Some(b) = config.bunching {
        s = apply_bunching_envelope(&s, b.amplitude, b.timescale, config.seed)?;
    }
    s = thin(&s, config.efficiency, config.seed)?;
    s = add_background(&s, config.background_rate, config.duration, config.seed)?;
    Ok(s.with_label("detection"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weak(duration: f64, seed: u64) -> TrajectoryConfig {
        TrajectoryConfig::new(EmitterParams::reference(0.1), duration, seed)
    }

    #[test]
    fn undriven_atom_is_dark() {
        let p = EmitterParams::reference(0.0);
        let s = simulate_emissions(&TrajectoryConfig::new(p, 1e-3, 1)).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn zero_duration_is_rejected() {
        assert!(simulate_emissions(&weak(0.0, 1)).is_err());
    }

    #[test]
    fn streams_are_deterministic_and_in_range() {
        let c = weak(2e-3, 42);
        let a = simulate_emissions(&c).unwrap();
        let b = simulate_emissions(&c).unwrap();
        assert_eq!(a, b);
        assert!(a.times.iter().all(|&t| (0.0..=2e-3).contains(&t)));
        let other = simulate_emissions(&weak(2e-3, 43)).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn duty_cycle_restricts_to_drive_windows() {
        let mut c = weak(2e-3, 5);
        c.duty_cycle = Some(DutyCycle { drive: 60e-6, dead: 440e-6 });
        let s = simulate_emissions(&c).unwrap();
        assert!(!s.is_empty());
        assert!(s.times.iter().all(|&t| (t % 500e-6) < 60e-6));
    }

    #[test]
    fn thinning_limits_and_binomial_count() {
        let s = PhotonStream::new((0..100_000).map(|i| i as f64).collect(), "x").unwrap();
        assert_eq!(thin(&s, 1.0, 3).unwrap(), s);
        assert!(thin(&s, 0.0, 3).unwrap().is_empty());
        let kept = thin(&s, 0.5, 3).unwrap().len() as f64;
        assert!((kept - 50_000.0).abs() <= 3.0 * (100_000.0f64 / 4.0).sqrt());
    }

    #[test]
    fn jitter_statistics_and_determinism() {
        let mut c = weak(1.0, 0);
        c.detuning_jitter_sigma = 2.0 * std::f64::consts::PI * 1e6;
        let runs = apply_detuning_jitter(&c, 10_000, 9).unwrap();
        assert_eq!(runs, apply_detuning_jitter(&c, 10_000, 9).unwrap());
        let n = runs.len() as f64;
        let mean = runs.iter().map(|p| p.delta).sum::<f64>() / n;
        let var = runs.iter().map(|p| (p.delta - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sigma = c.detuning_jitter_sigma;
        assert!((mean - c.emitter.delta).abs() < 3.0 * sigma / n.sqrt());
        assert!((var.sqrt() - sigma).abs() < 3.0 * sigma / (2.0 * n).sqrt());
        c.detuning_jitter_sigma = 0.0;
        assert!(apply_detuning_jitter(&c, 5, 1).unwrap().iter().all(|p| *p == c.emitter));
    }

    #[test]
    fn binary_and_csv_round_trip() {
        let a = PhotonStream::new(vec![1e-9, 2.5e-9, 7e-6], "A").unwrap();
        let b = PhotonStream::new(vec![2e-9, 3e-6], "B").unwrap();
        let mut buf = Vec::new();
        a.write_binary(&mut buf).unwrap();
        assert_eq!(PhotonStream::read_binary(&buf[..], "A").unwrap(), a);
        let mut csv = Vec::new();
        write_streams_csv(&mut csv, &[&a, &b]).unwrap();
        let back = read_streams_csv(&csv[..]).unwrap();
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn unsorted_stream_rejected() {
        assert!(matches!(PhotonStream::new(vec![1.0, 1.0], "x"), Err(Error::Unsorted { index: 1 })));
    }

    #[test]
    fn envelope_with_zero_amplitude_is_identity() {
        let s = PhotonStream::new((0..100).map(|i| i as f64 * 1e-6).collect(), "x").unwrap();
        assert_eq!(apply_bunching_envelope(&s, 0.0, 1e-6, 1).unwrap(), s);
    }

    #[test]
    fn background_adds_poisson_counts() {
        let s = PhotonStream::default();
        let b = add_background(&s, 1e4, 10.0, 2).unwrap();
        let n = b.len() as f64;
        assert!((n - 1e5).abs() < 4.0 * 1e5f64.sqrt());
    }
}
