//! Weighted least-squares fit of the Gaussian dip model
//! `N_c = C (1 − V exp(−δτ²/2σ²))` to coincidence data.
//!
//! The dip is assumed centered at zero delay; there is no center parameter.
//! Weights are Poisson, `1/max(N, 1)`. The minimizer is a damped
//! Gauss-Newton iteration with Marquardt diagonal scaling and gain-ratio
//! damping control; uncertainties come from the inverse curvature matrix
//! scaled by the reduced chi-square.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hom::{eval_dip_model, DipModel};
use crate::montecarlo::DipCurve;
use crate::wavepacket::coherence_sigma_from_bandwidth;

pub const MAX_ITERATIONS: usize = 200;
pub const STEP_TOLERANCE: f64 = 1e-10;
pub const GRADIENT_TOLERANCE: f64 = 1e-12;
/// Upper edge of the soft visibility box.
pub const VISIBILITY_CEILING: f64 = 1.05;
const MIN_POINTS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct FitFlags {
    pub visibility_above_one: bool,
    /// The dip is not significant (V below two standard errors).
    pub flat_signal: bool,
    /// The lowest count is more than one delay step away from zero delay.
    pub off_center: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub baseline: Estimate,
    pub visibility: Estimate,
    pub sigma_ps: Estimate,
    /// Order (C, V, σ).
    pub covariance: [[f64; 3]; 3],
    pub chi2_reduced: f64,
    pub n_points: usize,
    pub n_iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub flags: FitFlags,
}

impl FitResult {
    pub fn model(&self) -> DipModel {
        DipModel {
            baseline: self.baseline.value,
            visibility: self.visibility.value,
            sigma_ps: self.sigma_ps.value,
        }
    }

    /// Key-value text report.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "baseline_C = {:.6} +/- {:.6}",
            self.baseline.value, self.baseline.std_error
        );
        let _ = writeln!(
            s,
            "visibility_V = {:.6} +/- {:.6}",
            self.visibility.value, self.visibility.std_error
        );
        let _ = writeln!(
            s,
            "sigma_ps = {:.6} +/- {:.6}",
            self.sigma_ps.value, self.sigma_ps.std_error
        );
        let _ = writeln!(s, "chi2_reduced = {:.6}", self.chi2_reduced);
        let _ = writeln!(s, "n_points = {}", self.n_points);
        let _ = writeln!(s, "n_iterations = {}", self.n_iterations);
        let _ = writeln!(s, "converged = {}", self.converged);
        let _ = writeln!(s, "gradient_norm = {:.3e}", self.gradient_norm);
        for (i, row) in self.covariance.iter().enumerate() {
            let _ = writeln!(
                s,
                "covariance_{i} = {:.6e} {:.6e} {:.6e}",
                row[0], row[1], row[2]
            );
        }
        let _ = writeln!(
            s,
            "flag_visibility_above_one = {}",
            self.flags.visibility_above_one
        );
        let _ = writeln!(s, "flag_flat_signal = {}", self.flags.flat_signal);
        let _ = writeln!(s, "flag_off_center = {}", self.flags.off_center);
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit result serializes")
    }
}

/// Model value and gradient with respect to (C, V, σ).
fn model_and_gradient(p: &Vector3<f64>, x: f64) -> (f64, Vector3<f64>) {
    let (c, v, s) = (p[0], p[1], p[2]);
    let g = (-0.5 * (x / s).powi(2)).exp();
    let f = c * (1.0 - v * g);
    (
        f,
        Vector3::new(1.0 - v * g, -c * g, -c * v * g * x * x / (s * s * s)),
    )
}

/// Max relative discrepancy between the analytic gradient of the dip model
/// and central finite differences with step `1e-6` of each parameter scale.
pub fn jacobian_check(model: &DipModel, delta_tau_ps: f64) -> f64 {
    let p = Vector3::new(model.baseline, model.visibility, model.sigma_ps);
    let (_, analytic) = model_and_gradient(&p, delta_tau_ps);
    let mut worst = 0.0f64;
    for k in 0..3 {
        let scale = if p[k] != 0.0 { p[k].abs() } else { 1.0 };
        let h = 1e-6 * scale;
        let (mut up, mut down) = (p, p);
        up[k] += h;
        down[k] -= h;
        let f = |q: &Vector3<f64>| eval_dip_model(q[0], q[1], q[2], delta_tau_ps);
        let fd = (f(&up) - f(&down)) / (2.0 * h);
        let denom = analytic[k].abs().max(fd.abs());
        if denom > 1e-300 {
            worst = worst.max((analytic[k] - fd).abs() / denom);
        }
    }
    worst
}

fn weights(points: &[(f64, f64)]) -> Vec<f64> {
    points.iter().map(|&(_, y)| 1.0 / y.max(1.0)).collect()
}

fn objective(points: &[(f64, f64)], w: &[f64], p: &Vector3<f64>) -> f64 {
    points
        .iter()
        .zip(w)
        .map(|(&(x, y), wi)| {
            let r = y - eval_dip_model(p[0], p[1], p[2], x);
            wi * r * r
        })
        .sum()
}

fn normal_equations(
    points: &[(f64, f64)],
    w: &[f64],
    p: &Vector3<f64>,
) -> (Matrix3<f64>, Vector3<f64>) {
    let mut a = Matrix3::zeros();
    let mut g = Vector3::zeros();
    for (&(x, y), wi) in points.iter().zip(w) {
        let (f, j) = model_and_gradient(p, x);
        a += j * j.transpose() * *wi;
        g += j * (*wi * (y - f));
    }
    (a, g)
}

/// Initial guess from the empirical dip.
pub fn initial_guess(points: &[(f64, f64)]) -> Vector3<f64> {
    let mut by_distance: Vec<&(f64, f64)> = points.iter().collect();
    by_distance.sort_by(|a, b| b.0.abs().total_cmp(&a.0.abs()));
    let outer = points.len().div_ceil(4).max(1);
    let c0 = by_distance[..outer].iter().map(|p| p.1).sum::<f64>() / outer as f64;
    let ymin = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let v0 = if c0 > 0.0 {
        (1.0 - ymin / c0).clamp(0.05, 1.0)
    } else {
        0.5
    };

    let level = c0 * (1.0 - 0.5 * v0);
    let imin = points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let crossing = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = imin;
        for i in range {
            let (x0, y0) = points[prev];
            let (x1, y1) = points[i];
            if y1 >= level && y0 < level {
                let t = (level - y0) / (y1 - y0);
                return Some((x0 + t * (x1 - x0)).abs());
            }
            prev = i;
        }
        None
    };
    let right = crossing(&mut (imin + 1..points.len()));
    let left = crossing(&mut (0..imin).rev());
    let span = points.last().map(|p| p.0).unwrap_or(1.0) - points[0].0;
    let hwhm = match (left, right) {
        (Some(l), Some(r)) => 0.5 * (l + r),
        (Some(h), None) | (None, Some(h)) => h,
        (None, None) => span / 8.0,
    };
    let s0 = (hwhm / (2.0 * LN_2).sqrt()).max(span * 1e-3).max(1e-6);
    Vector3::new(c0, v0, s0)
}

fn check_points(points: &[(f64, f64)]) -> Result<()> {
    if points.len() < MIN_POINTS {
        return Err(Error::domain(format!(
            "need at least {MIN_POINTS} points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|(x, y)| !x.is_finite() || !y.is_finite() || *y < 0.0)
    {
        return Err(Error::domain(
            "delays must be finite and counts finite and >= 0",
        ));
    }
    if points.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::domain("delays must be strictly increasing"));
    }
    Ok(())
}

fn off_center(points: &[(f64, f64)]) -> bool {
    let imin = points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let step = points
        .windows(2)
        .map(|w| w[1].0 - w[0].0)
        .fold(f64::INFINITY, f64::min);
    points[imin].0.abs() > step * (1.0 + 1e-9)
}

pub fn fit_dip(curve: &DipCurve) -> Result<FitResult> {
    let points: Vec<(f64, f64)> = curve.delays().into_iter().zip(curve.counts()).collect();
    fit_points(&points)
}

/// Fits `(delay_ps, counts)` pairs with the default initialization.
pub fn fit_points(points: &[(f64, f64)]) -> Result<FitResult> {
    check_points(points)?;
    let init = initial_guess(points);
    let max_abs = points.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    if max_abs <= 2.0 * init[2] {
        return Err(Error::domain(format!(
            "no baseline point: max |delay| {max_abs} ps is within twice the initial sigma {:.3} ps",
            init[2]
        )));
    }
    fit_points_from(points, [init[0], init[1], init[2]])
}

/// Fits starting from an explicit `(C, V, σ)`.
pub fn fit_points_from(points: &[(f64, f64)], start: [f64; 3]) -> Result<FitResult> {
    check_points(points)?;
    if !(start[2] > 0.0) {
        return Err(Error::domain("initial sigma must be positive"));
    }
    let w = weights(points);
    let mut p = Vector3::from(start);
    p[1] = p[1].clamp(0.0, VISIBILITY_CEILING);
    let mut cost = objective(points, &w, &p);
    let mut lambda = 1e-3;
    let mut nu = 2.0;
    let mut converged = false;
    let mut iterations = 0;
    let (mut a, mut g) = normal_equations(points, &w, &p);

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let grad_norm = g.amax() / (1.0 + cost);
        if grad_norm < GRADIENT_TOLERANCE {
            converged = true;
            break;
        }
        let mut damped = a;
        for k in 0..3 {
            damped[(k, k)] += lambda * a[(k, k)].max(1e-300);
        }
        let Some(step) = damped.lu().solve(&g) else {
            lambda *= nu;
            nu *= 2.0;
            continue;
        };
        let mut trial = p + step;
        trial[1] = trial[1].clamp(0.0, VISIBILITY_CEILING);
        if !(trial[2] > 0.0) {
            trial[2] = 0.5 * p[2];
        }
        let actual_step = trial - p;
        let rel = (0..3)
            .map(|k| actual_step[k].abs() / (p[k].abs() + 1e-12))
            .fold(0.0, f64::max);
        let trial_cost = objective(points, &w, &trial);
        let predicted = actual_step.dot(&(g * 2.0 - a * actual_step));
        let gain = (cost - trial_cost) / predicted.max(1e-300);

        if trial_cost <= cost {
            p = trial;
            cost = trial_cost;
            (a, g) = normal_equations(points, &w, &p);
            if gain > 0.0 {
                lambda *= (1.0 - (2.0 * gain - 1.0).powi(3)).max(1.0 / 3.0);
                nu = 2.0;
            }
        } else {
            lambda *= nu;
            nu *= 2.0;
        }
        if rel < STEP_TOLERANCE {
            converged = true;
            break;
        }
        if lambda > 1e30 {
            break;
        }
    }

    let dof = points.len().saturating_sub(3).max(1) as f64;
    let chi2_reduced = cost / dof;
    let cov = a
        .try_inverse()
        .map(|inv| inv * chi2_reduced)
        .unwrap_or_else(|| Matrix3::from_element(f64::NAN));
    let se = |k: usize| cov[(k, k)].max(0.0).sqrt();
    let mut covariance = [[0.0; 3]; 3];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            *c = cov[(i, j)];
        }
    }
    let visibility = Estimate {
        value: p[1],
        std_error: se(1),
    };
    Ok(FitResult {
        baseline: Estimate {
            value: p[0],
            std_error: se(0),
        },
        visibility,
        sigma_ps: Estimate {
            value: p[2],
            std_error: se(2),
        },
        covariance,
        chi2_reduced,
        n_points: points.len(),
        n_iterations: iterations,
        converged,
        gradient_norm: g.amax() / (1.0 + cost),
        flags: FitFlags {
            visibility_above_one: p[1] > 1.0,
            flat_signal: !(visibility.value > 2.0 * visibility.std_error),
            off_center: off_center(points),
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BootstrapSummary {
    pub replicas: usize,
    pub baseline_std: f64,
    pub visibility_std: f64,
    pub sigma_std_ps: f64,
}

/// Parametric bootstrap: each replica redraws every count from a Poisson
/// distribution with the observed count as mean and refits.
pub fn bootstrap(points: &[(f64, f64)], replicas: usize, seed: u64) -> Result<BootstrapSummary> {
    let fits: Vec<Vector3<f64>> = (0..replicas)
        .into_par_iter()
        .filter_map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let resampled: Vec<(f64, f64)> = points
                .iter()
                .map(|&(x, y)| {
                    let v = if y > 0.0 {
                        Poisson::new(y).expect("positive").sample(&mut rng)
                    } else {
                        0.0
                    };
                    (x, v)
                })
                .collect();
            fit_points(&resampled)
                .ok()
                .filter(|f| f.converged)
                .map(|f| Vector3::new(f.baseline.value, f.visibility.value, f.sigma_ps.value))
        })
        .collect();
    if fits.len() < 2 {
        return Err(Error::domain(
            "bootstrap produced fewer than two converged fits",
        ));
    }
    let n = fits.len() as f64;
    let mean = fits.iter().fold(Vector3::zeros(), |acc, f| acc + f) / n;
    let var = fits.iter().fold(Vector3::zeros(), |acc: Vector3<f64>, f| {
        acc + (f - mean).component_mul(&(f - mean))
    }) / (n - 1.0);
    Ok(BootstrapSummary {
        replicas: fits.len(),
        baseline_std: var[0].sqrt(),
        visibility_std: var[1].sqrt(),
        sigma_std_ps: var[2].sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoherenceReport {
    pub sigma_fit_ps: f64,
    pub sigma_std_error_ps: f64,
    pub sigma_theory_ps: f64,
    pub z_score: f64,
    /// `z ≤ 2`.
    pub consistent: bool,
}

/// Compares a fitted σ to the transform limit of `bandwidth_ghz`.
pub fn coherence_consistency(sigma_fit: Estimate, bandwidth_ghz: f64) -> Result<CoherenceReport> {
    let theory = coherence_sigma_from_bandwidth(bandwidth_ghz)?;
    let diff = (sigma_fit.value - theory).abs();
    // differences at rounding level count as exact agreement
    let z = if diff <= 1e-9 * theory {
        0.0
    } else if sigma_fit.std_error > 0.0 {
        diff / sigma_fit.std_error
    } else {
        f64::INFINITY
    };
    Ok(CoherenceReport {
        sigma_fit_ps: sigma_fit.value,
        sigma_std_error_ps: sigma_fit.std_error,
        sigma_theory_ps: theory,
        z_score: z,
        consistent: z <= 2.0,
    })
}
