use fluoro::analysis::stats::{chi_square, ks_two_sample};
use fluoro::analysis::{fit_baseline, g2_histogram};
use fluoro::franson::split_to_alice_bob;
use fluoro::physics::Correlator;
use fluoro::trajectories::{simulate_detections, simulate_emissions, Bunching, TrajectoryConfig};
use fluoro::EmitterParams;

fn bin_integral(corr: &Correlator, center: f64, width: f64) -> f64 {
    let n = 8;
    let h = width / n as f64;
    let a = center - 0.5 * width;
    let mut s = corr.g2(a) + corr.g2(a + width);
    for k in 1..n {
        s += corr.g2(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn weak_drive_histogram_matches_liouvillian() {
    let params = EmitterParams::reference(0.10);
    let duration = 0.2;
    let stream = simulate_emissions(&TrajectoryConfig::new(params, duration, 21)).unwrap();
    assert!(stream.len() >= 100_000, "{}", stream.len());
    let (a, b) = split_to_alice_bob(&stream, 0.5, 22).unwrap();
    let (bw, span) = (1e-9, 60e-9);
    let hist = g2_histogram(&a.times, &b.times, bw, span).unwrap();
    let corr = Correlator::new(&params).unwrap();
    let scale = a.len() as f64 * b.len() as f64 / duration;
    let (obs, exp): (Vec<u64>, Vec<f64>) = hist
        .centers()
        .iter()
        .zip(&hist.counts)
        .map(|(&t, &c)| (c, scale * bin_integral(&corr, t, bw)))
        .filter(|(_, e)| *e >= 5.0)
        .unzip();
    let (chi2, bins) = chi_square(&obs, &exp).unwrap();
    let red = chi2 / bins as f64;
    assert!(bins >= 50 && (0.5..=2.0).contains(&red), "χ²/dof = {red} on {bins} bins");
}

#[test]
fn waiting_times_are_stationary() {
    let stream = simulate_emissions(&TrajectoryConfig::new(EmitterParams::reference(1.0), 0.02, 3)).unwrap();
    let gaps: Vec<f64> = stream.times.windows(2).map(|w| w[1] - w[0]).filter(|&g| g < 1e-6).collect();
    let (first, second) = gaps.split_at(gaps.len() / 2);
    let (d, p) = ks_two_sample(first, second).unwrap();
    assert!(p > 0.01, "KS D = {d}, p = {p}");
}

#[test]
fn bunching_envelope_is_recovered_by_baseline_fit() {
    let mut cfg = TrajectoryConfig::new(EmitterParams::reference(1.0), 0.2, 4);
    cfg.bunching = Some(Bunching { amplitude: 0.5, timescale: 2e-6 });
    let stream = simulate_detections(&cfg).unwrap();
    let (a, b) = split_to_alice_bob(&stream, 0.5, 5).unwrap();
    let hist = g2_histogram(&a.times, &b.times, 100e-9, 20e-6).unwrap();
    let fit = fit_baseline(&hist, 300e-9).unwrap();
    assert!((fit.amplitude - 0.5).abs() < 0.05, "{fit:?}");
    assert!((fit.timescale / 2e-6 - 1.0).abs() < 0.15, "{fit:?}");
    // after renormalising, the short-delay g² approaches one
    let g = fit.apply(&hist).normalized();
    let k = hist.bin_of(500e-9).unwrap();
    assert!((g[k] - 1.0).abs() < 0.1, "{}", g[k]);
}
