//! End-to-end Monte Carlo: per-pulse logic, sampler equivalence,
//! determinism and agreement with the analytic budget.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use upconv::fit::fit_dip;
use upconv::montecarlo::{
    predicted_counts, run_experiment, run_experiment_with_threads, simulate_emission,
    simulate_pulse, visibility_budget, DipCurve, ExperimentConfig, PreparedExperiment,
};
use upconv::source::{PairStatistics, PulseEmission};
use upconv::Error;

/// Lossless converters onto a common frequency, perfect detectors, no noise.
fn ideal() -> ExperimentConfig {
    let mut c = ExperimentConfig::paper_default();
    for conv in [&mut c.converter_signal, &mut c.converter_idler] {
        conv.peak_efficiency = 1.0;
        conv.response_fwhm_ghz = None;
        conv.noise_rate_cps = 0.0;
    }
    for d in &mut c.detectors {
        d.efficiency = 1.0;
        d.dark_rate_cps = 0.0;
    }
    c
}

fn one_pair() -> PulseEmission {
    PulseEmission {
        n_pairs: 1,
        n_raman_signal: 0,
        n_raman_idler: 0,
        jitter_offset_signal: 0.0,
        jitter_offset_idler: 0.0,
    }
}

#[test]
fn single_pair_bunches_at_zero_delay() {
    let config = ideal();
    let prep = PreparedExperiment::new(&config).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..2000 {
        let clicks = simulate_emission(&prep, &one_pair(), 0.0, &mut rng);
        assert!(!(clicks[0] && clicks[1]));
        assert!(clicks[0] || clicks[1]);
    }
}

#[test]
fn single_pair_splits_evenly_far_from_dip() {
    let config = ideal();
    let prep = PreparedExperiment::new(&config).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 20_000;
    let coinc = (0..n)
        .filter(|_| {
            let c = simulate_emission(&prep, &one_pair(), 500.0, &mut rng);
            c[0] && c[1]
        })
        .count();
    let frac = coinc as f64 / n as f64;
    assert!(
        (frac - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt(),
        "{frac}"
    );
}

#[test]
fn empty_pulse_without_noise_is_silent() {
    let config = ideal();
    let prep = PreparedExperiment::new(&config).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let empty = PulseEmission {
        n_pairs: 0,
        ..one_pair()
    };
    for _ in 0..100 {
        assert_eq!(
            simulate_emission(&prep, &empty, 0.0, &mut rng),
            [false, false]
        );
    }
}

/// Brute-force acquisition: every pulse simulated until enough starts.
fn direct_acquisition(config: &ExperimentConfig, delay: f64, seed: u64) -> (u64, u64) {
    let prep = PreparedExperiment::new(config).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut starts, mut coinc) = (0, 0);
    while starts < config.n_start_pulses {
        let c = simulate_pulse(&prep, delay, &mut rng);
        starts += u64::from(c[0]);
        coinc += u64::from(c[0] && c[1]);
    }
    (starts, coinc)
}

#[test]
fn skip_ahead_sampler_matches_direct_simulation() {
    let mut config = ExperimentConfig::paper_default();
    config.source.mean_pairs_per_pulse = 0.3;
    for conv in [&mut config.converter_signal, &mut config.converter_idler] {
        conv.peak_efficiency = 0.5;
    }
    config.n_start_pulses = 40_000;
    config.delays_ps = vec![0.0, 12.0, 60.0];
    let curve = run_experiment(&config).unwrap();
    for (k, point) in curve.points.iter().enumerate() {
        let (starts, coinc) = direct_acquisition(&config, point.delay_ps, 100 + k as u64);
        let (a, b) = (point.coincidences as f64, coinc as f64);
        let z = (a - b).abs() / (a + b).sqrt();
        assert_eq!(starts, point.starts);
        assert!(z < 4.0, "delay {}: {a} vs {b}", point.delay_ps);
    }
}

#[test]
fn results_independent_of_thread_count_and_repeatable() {
    let mut config = ExperimentConfig::paper_default();
    config.n_start_pulses = 20_000;
    let one = run_experiment_with_threads(&config, Some(1)).unwrap();
    let three = run_experiment_with_threads(&config, Some(3)).unwrap();
    let again = run_experiment_with_threads(&config, Some(1)).unwrap();
    assert_eq!(one, three);
    assert_eq!(one, again);
    assert_eq!(one.to_csv(), three.to_csv());

    config.rng_seed += 1;
    let other = run_experiment(&config).unwrap();
    assert_ne!(one.counts(), other.counts());
    assert_ne!(one.config_digest, other.config_digest);
}

#[test]
fn dip_is_symmetric_in_delay() {
    let mut config = ExperimentConfig::paper_default();
    config.n_start_pulses = 200_000;
    let curve = run_experiment(&config).unwrap();
    let counts = curve.counts();
    let n = counts.len();
    let stat: f64 = (0..n / 2)
        .map(|k| {
            let (a, b) = (counts[k], counts[n - 1 - k]);
            (a - b).powi(2) / (a + b)
        })
        .sum();
    let p = 1.0 - ChiSquared::new((n / 2) as f64).unwrap().cdf(stat);
    assert!(p > 0.001, "p = {p}");
}

#[test]
fn simulated_counts_match_budget_prediction() {
    let mut config = ExperimentConfig::paper_default();
    config.n_start_pulses = 200_000;
    let curve = run_experiment(&config).unwrap();
    let prep = PreparedExperiment::new(&config).unwrap();
    let predicted = predicted_counts(&prep, &config.delays_ps);
    let chi2: f64 = curve
        .counts()
        .iter()
        .zip(&predicted)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let p = 1.0 - ChiSquared::new(predicted.len() as f64).unwrap().cdf(chi2);
    assert!(p > 0.001, "chi2 = {chi2}, p = {p}");
}

#[test]
fn distinguishable_colours_give_no_dip() {
    let mut config = ExperimentConfig::paper_default();
    config.converter_signal.pump_frequency_thz = 0.0;
    config.converter_idler.pump_frequency_thz = 0.0;
    let budget = visibility_budget(&config).unwrap();
    assert!(budget.visibility.abs() < 1e-6, "{}", budget.visibility);
    config.n_start_pulses = 200_000;
    let fit = fit_dip(&run_experiment(&config).unwrap()).unwrap();
    assert!(
        fit.visibility.value < 3.0 * fit.visibility.std_error + 1e-9,
        "{:?}",
        fit.visibility
    );
    assert!(fit.flags.flat_signal);
}

#[test]
fn timing_jitter_lowers_visibility() {
    let mut config = ExperimentConfig::paper_default();
    let mut previous = f64::INFINITY;
    for jitter in [0.0, 5.0, 20.0] {
        config.source.timing_jitter_sigma_ps = jitter;
        let v = visibility_budget(&config).unwrap().visibility;
        assert!(v < previous, "jitter {jitter}: {v}");
        previous = v;
    }
    config.n_start_pulses = 200_000;
    let fits: Vec<_> = [0.0, 20.0]
        .iter()
        .map(|&j| {
            config.source.timing_jitter_sigma_ps = j;
            fit_dip(&run_experiment(&config).unwrap()).unwrap()
        })
        .collect();
    let gap = fits[0].visibility.value - fits[1].visibility.value;
    let se = fits[0]
        .visibility
        .std_error
        .hypot(fits[1].visibility.std_error);
    assert!(gap > 3.0 * se, "{gap} vs {se}");
}

#[test]
fn thermal_pairs_reduce_visibility() {
    let mut config = ExperimentConfig::paper_default();
    let poisson = visibility_budget(&config).unwrap().visibility;
    config.source.pair_statistics = PairStatistics::Thermal;
    let thermal = visibility_budget(&config).unwrap().visibility;
    assert!(thermal < poisson);
}

#[test]
fn budget_noise_free_limit_is_unity() {
    let mut config = ideal();
    config.source.mean_pairs_per_pulse = 1e-4;
    config.source.raman_mean_signal = Some(0.0);
    config.source.raman_mean_idler = Some(0.0);
    let b = visibility_budget(&config).unwrap();
    assert!(b.visibility > 0.999, "{}", b.visibility);
    assert!(!b.truncation_warning);
}

#[test]
fn pulse_cap_returns_partial_curve() {
    let mut config = ExperimentConfig::paper_default();
    config.pulse_cap = 100_000;
    match run_experiment(&config) {
        Err(Error::PulseCap { partial, cap, .. }) => {
            assert_eq!(cap, 100_000);
            assert!(!partial.complete);
            assert_eq!(partial.points.len(), config.delays_ps.len());
            assert!(partial
                .points
                .iter()
                .all(|p| p.starts < config.n_start_pulses));
        }
        other => panic!("expected pulse cap error, got {other:?}"),
    }
}

#[test]
fn invalid_configurations_rejected() {
    let mut config = ExperimentConfig::paper_default();
    config.tia.coincidence_window_ns = 10.0;
    assert!(config.validate().is_err());
    let mut config = ExperimentConfig::paper_default();
    config.detectors[1].efficiency = 1.5;
    assert!(run_experiment(&config).is_err());
    let mut config = ExperimentConfig::paper_default();
    config.delays_ps = vec![0.0, -4.0];
    assert!(run_experiment(&config).is_err());
}

#[test]
fn dip_curve_csv_round_trip() {
    let mut config = ExperimentConfig::paper_default();
    config.n_start_pulses = 5_000;
    let curve = run_experiment(&config).unwrap();
    let back = DipCurve::from_csv(&curve.to_csv()).unwrap();
    assert_eq!(back.delays(), curve.delays());
    assert_eq!(back.counts(), curve.counts());
}

#[test]
fn malformed_csv_names_row() {
    let text = "delay_ps,coincidences,starts\n-4,10,100\n0,abc,100\n4,12,100\n";
    match DipCurve::from_csv(text) {
        Err(Error::Csv { row, .. }) => assert_eq!(row, 3),
        other => panic!("{other:?}"),
    }
    let text = "delay_ps,coincidences,starts\n-4,10,100\n-8,9,100\n";
    assert!(matches!(
        DipCurve::from_csv(text),
        Err(Error::Csv { row: 3, .. })
    ));
    assert!(matches!(
        DipCurve::from_csv("a,b,c\n1,2,3\n"),
        Err(Error::Csv { row: 1, .. })
    ));
}

#[test]
fn digest_tracks_configuration() {
    let a = ExperimentConfig::paper_default();
    let mut b = a.clone();
    assert_eq!(a.digest(), b.digest());
    b.source.mean_pairs_per_pulse = 0.051;
    assert_ne!(a.digest(), b.digest());
    assert_eq!(a.digest().len(), 64);
}
