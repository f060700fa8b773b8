//! Dip-model fitting: recovery, robustness, error estimates.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use upconv::fit::{bootstrap, fit_points, fit_points_from, jacobian_check, Estimate};
use upconv::hom::{eval_dip_model, DipModel};

fn delays() -> Vec<f64> {
    (-10..=10).map(|k| 4.0 * k as f64).collect()
}

fn exact(c: f64, v: f64, s: f64) -> Vec<(f64, f64)> {
    delays()
        .into_iter()
        .map(|x| (x, eval_dip_model(c, v, s, x)))
        .collect()
}

fn noisy(c: f64, v: f64, s: f64, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    exact(c, v, s)
        .into_iter()
        .map(|(x, m)| {
            (
                x,
                if m > 0.0 {
                    Poisson::new(m).unwrap().sample(&mut rng)
                } else {
                    0.0
                },
            )
        })
        .collect()
}

#[test]
fn perturbed_starts_converge_to_truth() {
    let pts = exact(300.0, 0.732, 9.5);
    for fc in [0.5, 1.5] {
        for fv in [0.5, 1.3] {
            for fs in [0.5, 1.5] {
                let f = fit_points_from(&pts, [300.0 * fc, 0.732 * fv, 9.5 * fs]).unwrap();
                assert!(f.converged);
                assert!(
                    (f.visibility.value - 0.732).abs() < 1e-6,
                    "{fc} {fv} {fs}: {:?}",
                    f.visibility
                );
                assert!((f.sigma_ps.value - 9.5).abs() < 1e-5);
            }
        }
    }
}

#[test]
fn noisy_recovery_rate() {
    let hits = (0..100)
        .filter(|&seed| {
            let f = fit_points(&noisy(300.0, 0.732, 9.5, seed)).unwrap();
            (f.visibility.value - 0.732).abs() <= 0.05
        })
        .count();
    assert!(hits >= 90, "{hits}/100");
}

#[test]
fn curvature_errors_match_scatter() {
    let fits: Vec<_> = (0..200)
        .map(|s| fit_points(&noisy(300.0, 0.732, 9.5, 1000 + s)).unwrap())
        .collect();
    let mean = fits.iter().map(|f| f.visibility.value).sum::<f64>() / fits.len() as f64;
    let scatter = (fits
        .iter()
        .map(|f| (f.visibility.value - mean).powi(2))
        .sum::<f64>()
        / (fits.len() - 1) as f64)
        .sqrt();
    let typical = fits.iter().map(|f| f.visibility.std_error).sum::<f64>() / fits.len() as f64;
    assert!(
        (typical / scatter - 1.0).abs() < 0.25,
        "{typical} vs {scatter}"
    );
}

#[test]
fn bootstrap_agrees_with_curvature() {
    let pts = noisy(300.0, 0.732, 9.5, 5);
    let f = fit_points(&pts).unwrap();
    let b = bootstrap(&pts, 200, 9).unwrap();
    assert!(b.replicas >= 190);
    assert!((b.visibility_std / f.visibility.std_error - 1.0).abs() < 0.35);
    assert!((b.sigma_std_ps / f.sigma_ps.std_error - 1.0).abs() < 0.35);
}

#[test]
fn flat_data_gives_null_visibility() {
    let pts: Vec<(f64, f64)> = noisy(300.0, 0.0, 9.5, 17);
    let f = fit_points(&pts).unwrap();
    assert!(f.visibility.value < 3.0 * f.visibility.std_error + 1e-9);
    assert!(f.flags.flat_signal);
}

#[test]
fn visibility_stays_in_soft_box() {
    for seed in 0..50 {
        let f = fit_points(&noisy(300.0, 1.0, 9.5, seed)).unwrap();
        assert!((0.0..=1.05).contains(&f.visibility.value));
        assert_eq!(f.flags.visibility_above_one, f.visibility.value > 1.0);
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    let m = DipModel::new(300.0, 0.732, 9.5).unwrap();
    for x in [-40.0, -12.0, -3.0, 0.0, 0.5, 5.0, 9.5, 25.0] {
        assert!(jacobian_check(&m, x) < 1e-5, "δτ={x}");
    }
}

#[test]
fn input_validation() {
    let pts = exact(300.0, 0.7, 9.5);
    assert!(fit_points(&pts[8..12]).is_err());
    let mut bad = pts.clone();
    bad[3].1 = -1.0;
    assert!(fit_points(&bad).is_err());
    assert!(fit_points_from(&pts, [300.0, 0.7, 0.0]).is_err());
}

#[test]
fn coherence_report_uses_bandwidth() {
    let r = upconv::fit::coherence_consistency(
        Estimate {
            value: 9.5,
            std_error: 1.3,
        },
        25.0,
    )
    .unwrap();
    assert!((r.sigma_theory_ps - 10.6004).abs() < 1e-4);
    assert!(r.consistent);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noiseless_recovery(c in 10.0f64..1e5, v in 0.2f64..1.0, s in 4.0f64..15.0) {
        let f = fit_points(&exact(c, v, s)).unwrap();
        prop_assert!(f.converged);
        prop_assert!((f.baseline.value / c - 1.0).abs() < 1e-6);
        prop_assert!((f.visibility.value / v - 1.0).abs() < 1e-6);
        prop_assert!((f.sigma_ps.value / s - 1.0).abs() < 1e-6);
    }

    #[test]
    fn equivariant_under_scaling(seed in 0u64..1000, k in 0.5f64..4.0, t in 0.5f64..2.0) {
        let pts = noisy(300.0, 0.732, 9.5, seed);
        let base = fit_points(&pts).unwrap();
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x * t, y)).collect();
        let f = fit_points(&scaled).unwrap();
        prop_assert!((f.sigma_ps.value / (t * base.sigma_ps.value) - 1.0).abs() < 1e-6);
        prop_assert!((f.visibility.value - base.visibility.value).abs() < 1e-6);
        // amplitude scaling with matched weights leaves V and σ unchanged
        let amp: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x, y * k)).collect();
        let g = fit_points(&amp).unwrap();
        prop_assert!((g.baseline.value / (k * base.baseline.value) - 1.0).abs() < 1e-6);
        prop_assert!((g.visibility.value - base.visibility.value).abs() < 1e-6);
    }
}
