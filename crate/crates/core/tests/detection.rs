use h2df_core::rng::stream;
use h2df_core::signal::{
    calibrate_threshold, ered_count_signals, extract_aggregate, null_ratio, Aggregate,
    DetectionConfig, ScenarioSignals, C64,
};
use h2df_core::AspVector;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Calibrated with 10^5 noise-only draws, root seed 2026.
const GOLDEN_GAMMA_NT64_K4: f64 = 3.345_885_080_334_253;

fn cn<R: Rng>(rng: &mut R) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

#[test]
fn golden_gamma() {
    let g = calibrate_threshold(64, 4, 1e-2, 100_000, 2026).unwrap();
    assert!((g - GOLDEN_GAMMA_NT64_K4).abs() < 1e-9 * g, "{g}");
}

#[test]
fn gamma_nonincreasing_in_antennas() {
    let mut prev = f64::INFINITY;
    for n_t in [16, 32, 64, 128, 256] {
        let g = calibrate_threshold(n_t, 4, 1e-2, 20_000, 5).unwrap();
        assert!(g <= prev, "N_T = {n_t}: {g} > {prev}");
        prev = g;
    }
}

#[test]
fn median_calibration() {
    let g = calibrate_threshold(32, 3, 0.5, 20_001, 8).unwrap();
    let mut ratios: Vec<f64> = (0..20_001).map(|t| null_ratio(3, 32, &mut stream(8, t))).collect();
    ratios.sort_by(|a, b| a.total_cmp(b));
    assert_eq!(g, ratios[10_000]);
}

#[test]
fn noise_only_false_alarm_rate() {
    let gamma = calibrate_threshold(64, 3, 0.05, 40_000, 1).unwrap();
    let cfg = DetectionConfig::new(64, gamma, 0.5, 0.05).unwrap();
    let mut rng = stream(99, 0);
    let n = 20_000;
    let hits = (0..n)
        .filter(|_| {
            let y = DMatrix::from_fn(5, 64, |_, _| cn(&mut rng));
            ered_count_signals(&y, &cfg).unwrap() > 0
        })
        .count();
    let pf = hits as f64 / n as f64;
    assert!((pf - 0.05).abs() < 0.01, "{pf}");
}

#[test]
fn single_strong_signal_detected() {
    let gamma = calibrate_threshold(128, 3, 1e-2, 20_000, 2).unwrap();
    let cfg = DetectionConfig::new(128, gamma, 0.5, 1e-2).unwrap();
    let mut rng = stream(4, 0);
    let amp = 10f64.powf(10.0 / 20.0);
    let n = 2000;
    let ones = (0..n)
        .filter(|_| {
            let g = DVector::from_fn(128, |_, _| cn(&mut rng));
            let x = DVector::from_fn(5, |_, _| C64::from_polar(amp, rng.random::<f64>() * std::f64::consts::TAU));
            let y = DMatrix::from_fn(5, 128, |_, _| cn(&mut rng)) + &x * g.transpose();
            ered_count_signals(&y, &cfg).unwrap() == 1
        })
        .count();
    assert!(ones as f64 >= 0.95 * n as f64, "{ones}/{n}");
}

#[test]
fn idle_scenario_aggregate_is_zero() {
    let gamma = 1e6;
    let cfg = DetectionConfig::new(32, gamma, 0.5, 1e-2).unwrap();
    let mut rng = stream(6, 0);
    let sig = ScenarioSignals {
        y: (0..8).map(|_| DMatrix::from_fn(5, 32, |_, _| cn(&mut rng))).collect(),
        node_channels: vec![],
        snr_db: 0.0,
    };
    let agg = extract_aggregate(&sig, &cfg).unwrap();
    assert_eq!(agg, Aggregate::from_counts(AspVector::zeros(8)));
    assert!(agg.is_consistent());
}
