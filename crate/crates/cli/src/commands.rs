use std::io::Write;

use serde::Serialize;
use serde_json::json;

use fluoro::analysis::{
    bell_violation_threshold, fit_baseline, g2_histogram, run_chsh, s_vs_window_scan, s_vs_window_simulated,
    ChshExperiment, ChshReport, ChshSettings, ExactWindow, FormulaWindow, ScanResult, WindowModel,
};
use fluoro::franson::{split_to_alice_bob, write_events_csv};
use fluoro::physics::{
    antibunching_window, g2_weak, liouvillian_g2, pair_rate, pair_rate_optimum, saturation, scattering_rates,
    visibility, CorrelationCurve, PairRateReport,
};
use fluoro::rng::{child_seed, Stage};
use fluoro::tomography::{
    bootstrap, measured_records, mle_fit, sigma_zz_weak_model, with_sigma_zz, MeasurementRecord, ResampleNoise,
    TomographyReport,
};
use fluoro::trajectories::simulate_detections;
use fluoro::{EmitterParams, SCHEMA_VERSION};

use crate::config::{pauli_phase, Resolved, ScanMode};
use crate::error::CliError;
use crate::output::OutputSet;

pub struct Context<'a> {
    pub cfg: &'a Resolved,
    pub simulate: bool,
}

fn csv<F>(header: &str, rows: usize, mut row: F) -> Vec<u8>
where
    F: FnMut(usize, &mut Vec<u8>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    writeln!(buf, "{header}").expect("write to memory");
    for k in 0..rows {
        row(k, &mut buf).expect("write to memory");
    }
    buf
}

pub fn g2(ctx: &Context, out: &mut OutputSet) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let p = cfg.emitter;
    let n = cfg.tau_points;
    let tau: Vec<f64> = (0..n).map(|k| -cfg.tau_max + 2.0 * cfg.tau_max * k as f64 / (n - 1) as f64).collect();
    let curve = liouvillian_g2(&p, &tau)?;
    out.add_with("g2_analytic.csv", |w| curve.write_csv(w))?;
    out.plot("g² (analytic)", "g2_analytic.csv", "tau_s", &["value"], "τ (s)", "g²(τ)", false);
    let weak = CorrelationCurve { tau: tau.clone(), values: tau.iter().map(|&t| g2_weak(&p, t)).collect() };
    out.add_with("g2_weak.csv", |w| weak.write_csv(w))?;
    out.plot("g² (weak-drive limit)", "g2_weak.csv", "tau_s", &["value"], "τ (s)", "g²(τ)", false);

    let mut simulated = None;
    if ctx.simulate {
        let stream = simulate_detections(&cfg.trajectory)?;
        let (a, b_side) = split_to_alice_bob(
            &stream,
            cfg.interferometer.splitter_ratio,
            child_seed(cfg.trajectory.seed, Stage::Split, 0),
        )?;
        let hist = g2_histogram(&a.times, &b_side.times, cfg.bin_width, cfg.histogram_span)?
            .with_poisson_normalization(a.len(), b_side.len(), cfg.trajectory.duration);
        let baseline = match cfg.trajectory.bunching {
            // the envelope is fitted on a wide coarse histogram, then rescaled to the fine bins
            Some(b) => {
                let span = cfg.histogram_span.max(10.0 * b.timescale);
                let width = cfg.bin_width.max(span / 2000.0);
                let wide = g2_histogram(&a.times, &b_side.times, width, span)?;
                let mut fit = fit_baseline(&wide, 5.0 / p.gamma)?;
                let k = cfg.bin_width / width;
                fit.level *= k;
                fit.normalization *= k;
                Some(fit)
            }
            None => None,
        };
        let hist = match &baseline {
            Some(f) => f.apply(&hist),
            None => hist,
        };
        out.add_with("g2_histogram.csv", |w| hist.write_csv(w))?;
        out.add_with("stream_A.fbt", |w| a.write_binary(w))?;
        out.add_with("stream_B.fbt", |w| b_side.write_binary(w))?;
        out.plot("g² (simulated)", "g2_histogram.csv", "tau_s", &["g2_normalized"], "τ (s)", "g²(τ)", false);
        let zero = hist.bin_of(0.0).map(|k| hist.normalized()[k]);
        simulated = Some(json!({
            "detections": stream.len(),
            "detections_a": a.len(),
            "detections_b": b_side.len(),
            "detection_rate_per_s": stream.len() as f64 / cfg.trajectory.duration,
            "g2_zero_bin": zero,
            "baseline_fit": baseline,
        }));
    }
    let rates = scattering_rates(&p);
    out.add_json(
        "g2.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "params": p,
            "saturation": saturation(&p),
            "emission_rate_per_s": rates.total,
            "antibunching_window_s": antibunching_window(p.gamma, p.rabi),
            "simulated": simulated,
        }),
    )
}

pub fn visibility_curve(ctx: &Context, out: &mut OutputSet) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let p = cfg.emitter;
    let v = cfg
        .s0_grid
        .iter()
        .map(|&s0| visibility(&EmitterParams::from_s0(p.gamma, p.delta, s0)?, cfg.visibility_delay))
        .collect::<fluoro::Result<Vec<_>>>()?;
    out.add("visibility.csv", csv("s0,visibility", v.len(), |k, w| writeln!(w, "{:e},{:e}", cfg.s0_grid[k], v[k])));
    out.plot("single-photon visibility", "visibility.csv", "s0", &["visibility"], "s₀", "V", true);
    out.add_json(
        "visibility.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "gamma": p.gamma,
            "delta": p.delta,
            "delay_s": cfg.visibility_delay,
            "s0": cfg.s0_grid,
            "visibility": v,
        }),
    )
}

fn experiment(cfg: &Resolved, settings: ChshSettings) -> ChshExperiment {
    ChshExperiment {
        trajectory: cfg.trajectory.clone(),
        interferometer: cfg.interferometer,
        settings,
        center: Some(cfg.center),
        half_width: cfg.half_width,
    }
}

fn exact_model(cfg: &Resolved, max_half_width: f64) -> fluoro::Result<ExactWindow> {
    ExactWindow::new(&cfg.emitter, &cfg.interferometer, cfg.settings, cfg.center, max_half_width)
}

fn scan_csv(scan: &ScanResult) -> Vec<u8> {
    csv("half_width_s,S,sigma_S,coincidences", scan.windows.len(), |k, w| {
        let sigma = scan.sigma.as_ref().map_or(String::new(), |s| format!("{:e}", s[k]));
        let n = scan.coincidences.as_ref().map_or(String::new(), |c| c[k].to_string());
        writeln!(w, "{:e},{:e},{sigma},{n}", scan.windows[k], scan.s[k])
    })
}

#[derive(Serialize)]
struct ChshOutput {
    #[serde(flatten)]
    report: ChshReport,
    #[serde(rename = "predicted_S")]
    predicted_s: f64,
}

pub fn chsh(ctx: &Context, out: &mut OutputSet) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let run = run_chsh(&experiment(cfg, cfg.settings))?;
    let scan = s_vs_window_simulated(&run.events, run.center, &cfg.windows)?;
    let predicted_s = exact_model(cfg, cfg.half_width)?.s(cfg.half_width)?;
    let report = ChshReport::new(cfg.emitter, cfg.settings, run.center, cfg.half_width, &run.result, Some(&scan));
    out.add_json("chsh.json", &ChshOutput { report, predicted_s })?;
    out.add("chsh_scan.csv", scan_csv(&scan));
    out.plot("S vs coincidence window (simulated)", "chsh_scan.csv", "half_width_s", &["S"], "δt (s)", "S", false);
    if cfg.write_events {
        for (k, events) in run.events.iter().enumerate() {
            out.add_with(&format!("events_setting{k}.csv"), |w| write_events_csv(w, events))?;
        }
    }
    log::info!("S = {:.3} ± {:.3}", run.result.s, run.result.sigma_s);
    Ok(())
}

pub fn scan_window(ctx: &Context, out: &mut OutputSet) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let max = *cfg.windows.last().expect("windows are non-empty");
    let step = cfg.windows.get(1).map_or(max, |w| w - cfg.windows[0]);
    let (scan, threshold) = match cfg.scan_mode {
        ScanMode::Exact => {
            let m = exact_model(cfg, max)?;
            (s_vs_window_scan(&m, "exact", &cfg.windows)?, bell_violation_threshold(&m, max, step)?)
        }
        mode => {
            let m = FormulaWindow::new(
                &cfg.emitter,
                cfg.interferometer.delay_a,
                cfg.settings,
                mode == ScanMode::FormulaRescaled,
            )?;
            (s_vs_window_scan(&m, mode.as_str(), &cfg.windows)?, bell_violation_threshold(&m, max, step)?)
        }
    };
    out.add("scan_window.csv", scan_csv(&scan));
    out.plot("S vs coincidence window", "scan_window.csv", "half_width_s", &["S"], "δt (s)", "S", false);
    let simulated = if ctx.simulate {
        let run = run_chsh(&experiment(cfg, cfg.settings))?;
        let sim = s_vs_window_simulated(&run.events, run.center, &cfg.windows)?;
        out.add("scan_window_simulated.csv", scan_csv(&sim));
        out.plot(
            "S vs coincidence window (simulated)",
            "scan_window_simulated.csv",
            "half_width_s",
            &["S"],
            "δt (s)",
            "S",
            false,
        );
        Some(sim)
    } else {
        None
    };
    out.add_json(
        "scan_window.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "params": cfg.emitter,
            "settings": cfg.settings,
            "center_s": cfg.center,
            "mode": scan.mode,
            "windows": scan.windows,
            "S_of_window": scan.s,
            "threshold_s": threshold,
            "simulated": simulated,
        }),
    )
}

/// xx, xy, yx, yy records from a simulated acquisition.
fn synthesize_records(cfg: &Resolved) -> Result<Vec<MeasurementRecord>, CliError> {
    let settings = ChshSettings {
        phi_a: pauli_phase(false),
        phi_a_prime: pauli_phase(true),
        phi_b: pauli_phase(false),
        phi_b_prime: pauli_phase(true),
    };
    let run = run_chsh(&experiment(cfg, settings))?;
    let counts = run.result.counts.ok_or_else(|| CliError::Numeric("simulation produced no counts".into()))?;
    // setting order is (a,b), (a′,b), (a,b′), (a′,b′)
    let labels = ["xx", "yx", "xy", "yy"];
    let mut recs = Vec::new();
    for (label, (c, e)) in labels.iter().zip(counts.iter().zip(run.result.expectations)) {
        recs.push(MeasurementRecord::new(label, e.value.clamp(-1.0, 1.0), c.total())?);
    }
    recs.sort_by_key(|r| r.basis.to_string());
    Ok(recs)
}

pub fn tomography(ctx: &Context, out: &mut OutputSet) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let t = &cfg.tomography;
    let measured = if t.synthesize || ctx.simulate {
        synthesize_records(cfg)?
    } else if let Some(path) = &t.records_path {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read records {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("records {}: {e}", path.display())))?
    } else {
        measured_records()
    };
    let zz = match t.sigma_zz {
        Some(v) => v,
        None => sigma_zz_weak_model(&cfg.emitter, t.sigma_zz_delay, t.sigma_zz_half_width, 1e-11)?,
    };
    let records =
        if measured.iter().any(|r| r.basis.to_string() == "zz") { measured } else { with_sigma_zz(&measured, zz)? };
    let fit = mle_fit(&records, None, &t.fit)?;
    let boot = if t.bootstrap_samples >= 2 {
        Some(bootstrap(
            &records,
            &t.fit,
            t.bootstrap_samples,
            child_seed(t.fit.seed, Stage::Bootstrap, 0),
            ResampleNoise::Poisson,
        )?)
    } else {
        None
    };
    let report = TomographyReport::new(&fit, &records, Some(zz), &t.fit, boot);
    out.add_json("tomography.json", &report)?;
    let rho = &fit.rho.0;
    out.add(
        "rho.csv",
        csv("row,col,re,im", 16, |k, w| {
            let (r, c) = (k / 4, k % 4);
            writeln!(
                w,
                "{},{},{:e},{:e}",
                fluoro::tomography::BASIS[r],
                fluoro::tomography::BASIS[c],
                rho[(r, c)].re,
                rho[(r, c)].im
            )
        }),
    );
    out.bars("density matrix", "rho.csv", &["row", "col"], &["re", "im"]);
    log::info!("F = {:.4}, S_F = {:.4}", fit.fidelity, fit.horodecki_s);
    Ok(())
}

pub fn pair_rate_curve(ctx: &Context, out: &mut OutputSet) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let g = cfg.emitter.gamma;
    let rows: Vec<(f64, f64, f64, f64)> = cfg
        .s0_grid
        .iter()
        .map(|&s0| {
            let w = g * (2.0 * s0).sqrt();
            (s0, w, pair_rate(g, w), antibunching_window(g, w))
        })
        .collect();
    out.add(
        "pair_rate.csv",
        csv("s0,rabi_rad_per_s,pair_rate_per_s,window_s", rows.len(), |k, w| {
            let (a, b, c, d) = rows[k];
            writeln!(w, "{a:e},{b:e},{c:e},{d:e}")
        }),
    );
    out.plot("pair rate", "pair_rate.csv", "s0", &["pair_rate_per_s"], "s₀", "n_p (1/s)", true);
    let opt: PairRateReport = pair_rate_optimum(g)?;
    out.add_json(
        "pair_rate.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "gamma": g,
            "optimum": opt,
            "rabi_opt_over_gamma": opt.rabi_opt / g,
            "np_max_over_gamma": opt.np_max / g,
        }),
    )
}
