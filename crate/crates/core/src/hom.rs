//! Two-photon interference at a lossless 50/50 coupler.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::wavepacket::{mode_overlap, JointSpectralAmplitude, SpectralWavepacket};

/// Intervals per axis of the coarsest joint-spectrum grid.
pub const JOINT_MIN_INTERVALS: usize = 512;
const JOINT_MAX_INTERVALS: usize = 4096;
/// Agreement required between grid `N` and `2N` estimates of `P_c`.
pub const JOINT_TOLERANCE: f64 = 1e-8;

/// Gaussian dip `N_c = C (1 − V exp(−δτ²/2σ²))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipModel {
    pub baseline: f64,
    pub visibility: f64,
    pub sigma_ps: f64,
}

impl DipModel {
    pub fn new(baseline: f64, visibility: f64, sigma_ps: f64) -> Result<Self> {
        let m = Self {
            baseline,
            visibility,
            sigma_ps,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::domain(format!(
                "visibility must be in [0,1], got {}",
                self.visibility
            )));
        }
        if !(self.sigma_ps > 0.0) {
            return Err(Error::domain(format!(
                "sigma must be positive, got {}",
                self.sigma_ps
            )));
        }
        if !(self.baseline >= 0.0) {
            return Err(Error::domain(format!(
                "baseline must be >= 0, got {}",
                self.baseline
            )));
        }
        Ok(())
    }

    pub fn eval(&self, delta_tau_ps: f64) -> f64 {
        eval_dip_model(self.baseline, self.visibility, self.sigma_ps, delta_tau_ps)
    }
}

/// The dip function without validation; the fit evaluates it at trial
/// parameters that may leave the physical box.
pub fn eval_dip_model(baseline: f64, visibility: f64, sigma_ps: f64, delta_tau_ps: f64) -> f64 {
    let x = delta_tau_ps / sigma_ps;
    baseline * (1.0 - visibility * (-0.5 * x * x).exp())
}

fn check_overlap(xi: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::domain(format!(
            "distinguishability overlap must be in [0,1], got {xi}"
        )));
    }
    Ok(())
}

/// `P_c(τ) = ½(1 − ξ²|M(τ)|²)` for one photon in each input port.
pub fn coincidence_probability_separable(
    wp1: &SpectralWavepacket,
    wp2: &SpectralWavepacket,
    delay_ps: f64,
    distinguishability_overlap: f64,
) -> Result<f64> {
    check_overlap(distinguishability_overlap)?;
    let m2 = mode_overlap(wp1, wp2, delay_ps).magnitude_sqr();
    let xi2 = distinguishability_overlap * distinguishability_overlap;
    Ok((0.5 * (1.0 - xi2 * m2)).max(0.0))
}

/// Tensor-grid Simpson evaluation of the exchange integral
/// `∬ F*(ν₁,ν₂) F(ν₂,ν₁) e^{i2π(ν₁−ν₂)τ} dν₁dν₂ / ∬|F|²`
/// in sum/difference coordinates.
struct JointGrid {
    intervals: usize,
    diff: Vec<f64>,
    weighted_rows: Vec<Complex64>,
    norm: f64,
}

impl JointGrid {
    fn build(jsa: &JointSpectralAmplitude, intervals: usize) -> Self {
        let bx = jsa.sum_diff_box();
        let sums = quadrature::grid(bx.sum_min, bx.sum_max, intervals);
        let diff = quadrature::grid(-bx.diff_half, bx.diff_half, intervals);
        let ws = quadrature::simpson_weights(bx.sum_min, bx.sum_max, intervals);
        let wd = quadrature::simpson_weights(-bx.diff_half, bx.diff_half, intervals);

        let n = intervals + 1;
        let mut values = vec![Complex64::new(0.0, 0.0); n * n];
        for (i, s) in sums.iter().enumerate() {
            for (j, d) in diff.iter().enumerate() {
                values[i * n + j] = jsa.amplitude(0.5 * (s + d), 0.5 * (s - d));
            }
        }
        let mut rows = vec![Complex64::new(0.0, 0.0); n];
        let mut norm = 0.0;
        for i in 0..n {
            let row = &values[i * n..(i + 1) * n];
            for j in 0..n {
                // the grid is symmetric, so -d_j = d_{n-1-j}
                rows[j] += row[j].conj() * row[n - 1 - j] * ws[i];
                norm += ws[i] * wd[j] * row[j].norm_sqr();
            }
        }
        let weighted_rows = rows.iter().zip(&wd).map(|(r, w)| r * *w).collect();
        Self {
            intervals,
            diff,
            weighted_rows,
            norm,
        }
    }

    fn probability(&self, tau_ps: f64) -> f64 {
        if self.norm == 0.0 {
            return 0.5;
        }
        let exchange: Complex64 = self
            .diff
            .iter()
            .zip(&self.weighted_rows)
            .map(|(d, r)| r * Complex64::from_polar(1.0, 2.0 * PI * d * tau_ps))
            .sum();
        (0.5 * (1.0 - exchange.re / self.norm)).max(0.0)
    }
}

/// Coincidence probability for a general two-photon joint spectrum,
/// evaluated on successively doubled grids until the `N` and `2N` estimates
/// agree within [`JOINT_TOLERANCE`] at every requested delay.
pub struct JointEvaluator {
    jsa: JointSpectralAmplitude,
}

impl JointEvaluator {
    pub fn new(jsa: JointSpectralAmplitude) -> Self {
        Self { jsa }
    }

    pub fn probabilities(&self, delays_ps: &[f64]) -> Result<Vec<f64>> {
        let shift = self.jsa.delay_ps;
        let mut coarse = JointGrid::build(&self.jsa, JOINT_MIN_INTERVALS);
        loop {
            let fine = JointGrid::build(&self.jsa, coarse.intervals * 2);
            let mut worst = 0.0f64;
            let values: Vec<f64> = delays_ps
                .iter()
                .map(|&t| {
                    let p = fine.probability(t + shift);
                    worst = worst.max((p - coarse.probability(t + shift)).abs());
                    p
                })
                .collect();
            if worst < JOINT_TOLERANCE {
                return Ok(values);
            }
            if fine.intervals >= JOINT_MAX_INTERVALS {
                return Err(Error::Quadrature(format!(
                    "joint spectrum grid {0}x{0}: max change {worst:.3e} between {1} and {0} intervals exceeds {JOINT_TOLERANCE:e}",
                    fine.intervals, coarse.intervals
                )));
            }
            coarse = fine;
        }
    }
}

/// `P_c(τ) = ½(1 − Re ∬ F*(ν₁,ν₂) F(ν₂,ν₁) e^{i2π(ν₁−ν₂)τ})` by double quadrature.
pub fn coincidence_probability_joint(jsa: &JointSpectralAmplitude, delay_ps: f64) -> Result<f64> {
    JointEvaluator::new(jsa.clone())
        .probabilities(&[delay_ps])
        .map(|v| v[0])
}

#[derive(Clone, Debug, PartialEq)]
pub enum CurveGenerator {
    Separable {
        wp1: SpectralWavepacket,
        wp2: SpectralWavepacket,
        distinguishability_overlap: f64,
    },
    Joint(JointSpectralAmplitude),
    Model(DipModel),
}

/// A curve of values (probabilities or model counts) versus delay.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityCurve {
    pub delays_ps: Vec<f64>,
    pub values: Vec<f64>,
}

impl ProbabilityCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delay_ps,probability\n");
        for (d, p) in self.delays_ps.iter().zip(&self.values) {
            let _ = writeln!(out, "{d},{p}");
        }
        out
    }

    /// Interior local minima, refined by a parabola through the three
    /// neighbouring samples.
    pub fn local_minima(&self) -> Vec<f64> {
        let (x, y) = (&self.delays_ps, &self.values);
        let mut out = Vec::new();
        for i in 1..y.len().saturating_sub(1) {
            if y[i] < y[i - 1] && y[i] <= y[i + 1] {
                let h = x[i] - x[i - 1];
                let uniform = ((x[i + 1] - x[i]) - h).abs() <= 1e-9 * h;
                let curvature = y[i - 1] - 2.0 * y[i] + y[i + 1];
                let shift = if uniform && curvature > 0.0 {
                    0.5 * h * (y[i - 1] - y[i + 1]) / curvature
                } else {
                    0.0
                };
                out.push(x[i] + shift);
            }
        }
        out
    }
}

pub fn validate_delays(delays_ps: &[f64]) -> Result<()> {
    if delays_ps.is_empty() {
        return Err(Error::domain("delay list is empty"));
    }
    if delays_ps.iter().any(|d| !d.is_finite()) {
        return Err(Error::domain("delays must be finite"));
    }
    if delays_ps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("delays must be strictly increasing"));
    }
    Ok(())
}

pub fn hom_dip_curve(generator: &CurveGenerator, delays_ps: &[f64]) -> Result<ProbabilityCurve> {
    validate_delays(delays_ps)?;
    let values = match generator {
        CurveGenerator::Separable {
            wp1,
            wp2,
            distinguishability_overlap,
        } => delays_ps
            .iter()
            .map(|&t| coincidence_probability_separable(wp1, wp2, t, *distinguishability_overlap))
            .collect::<Result<Vec<_>>>()?,
        CurveGenerator::Joint(jsa) => JointEvaluator::new(jsa.clone()).probabilities(delays_ps)?,
        CurveGenerator::Model(m) => {
            m.validate()?;
            delays_ps.iter().map(|&t| m.eval(t)).collect()
        }
    };
    Ok(ProbabilityCurve {
        delays_ps: delays_ps.to_vec(),
        values,
    })
}
