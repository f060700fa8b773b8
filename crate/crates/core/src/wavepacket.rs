//! Gaussian single-photon spectral amplitudes and their overlaps.
//!
//! A wavepacket with intensity FWHM `Δν` has an amplitude
//! `φ(ν) ∝ exp(−(ν−ν₀)²/(4s²)) · exp(i2πν·t₀)` with `s = Δν / (2√(2 ln 2))`
//! the rms width of the spectral intensity and `t₀` its delay. The mode
//! overlap of two such photons is
//! `M(τ) = ∫ φ₁*(ν) φ₂(ν) e^{i2πντ} dν`, and for identical photons
//! `|M(τ)|² = exp(−τ²/(2σ²))` with `σ = √(ln 2)/(π Δν)`.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature;
use crate::units::{fwhm_per_sigma, ghz_to_thz};

/// Half-span of quadrature grids in units of amplitude rms width.
const GRID_HALF_SPAN_SIGMAS: f64 = 6.0;

/// Coherence parameter σ (ps) of a transform-limited Gaussian photon with
/// spectral intensity FWHM `fwhm_bandwidth_ghz`. This is the σ appearing in
/// the dip model `1 − V exp(−δτ²/2σ²)`.
pub fn coherence_sigma_from_bandwidth(fwhm_bandwidth_ghz: f64) -> Result<f64> {
    if !(fwhm_bandwidth_ghz > 0.0 && fwhm_bandwidth_ghz.is_finite()) {
        return Err(Error::domain(format!(
            "bandwidth must be positive and finite, got {fwhm_bandwidth_ghz} GHz"
        )));
    }
    Ok(LN_2.sqrt() / (PI * ghz_to_thz(fwhm_bandwidth_ghz)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralWavepacket {
    center_thz: f64,
    fwhm_ghz: f64,
    delay_ps: f64,
    amplitude_scale: f64,
}

impl SpectralWavepacket {
    pub fn new(center_thz: f64, fwhm_ghz: f64) -> Result<Self> {
        if !(center_thz > 0.0 && center_thz.is_finite()) {
            return Err(Error::domain(format!(
                "center frequency must be positive, got {center_thz} THz"
            )));
        }
        if !(fwhm_ghz > 0.0 && fwhm_ghz.is_finite()) {
            return Err(Error::domain(format!(
                "bandwidth must be positive, got {fwhm_ghz} GHz"
            )));
        }
        Ok(Self {
            center_thz,
            fwhm_ghz,
            delay_ps: 0.0,
            amplitude_scale: 1.0,
        })
    }

    pub fn with_delay(mut self, delay_ps: f64) -> Self {
        self.delay_ps = delay_ps;
        self
    }

    pub fn with_amplitude_scale(mut self, scale: f64) -> Self {
        self.amplitude_scale = scale;
        self
    }

    pub fn center_thz(&self) -> f64 {
        self.center_thz
    }

    pub fn fwhm_ghz(&self) -> f64 {
        self.fwhm_ghz
    }

    pub fn delay_ps(&self) -> f64 {
        self.delay_ps
    }

    pub fn amplitude_scale(&self) -> f64 {
        self.amplitude_scale
    }

    /// rms width of the spectral intensity, THz.
    pub fn intensity_sigma_thz(&self) -> f64 {
        ghz_to_thz(self.fwhm_ghz) / fwhm_per_sigma()
    }

    pub fn coherence_sigma_ps(&self) -> f64 {
        LN_2.sqrt() / (PI * ghz_to_thz(self.fwhm_ghz))
    }

    /// Spectral amplitude at `nu_thz`.
    pub fn amplitude(&self, nu_thz: f64) -> Complex64 {
        let s = self.intensity_sigma_thz();
        let x = nu_thz - self.center_thz;
        let norm = self.amplitude_scale * (2.0 * PI * s * s).powf(-0.25);
        let phase = 2.0 * PI * nu_thz * self.delay_ps;
        Complex64::from_polar(norm * (-x * x / (4.0 * s * s)).exp(), phase)
    }

    /// Quadrature range covering the amplitude to ±6 amplitude-sigmas.
    pub fn grid_range(&self) -> (f64, f64) {
        let half = GRID_HALF_SPAN_SIGMAS * std::f64::consts::SQRT_2 * self.intensity_sigma_thz();
        (self.center_thz - half, self.center_thz + half)
    }

    /// ∫|φ|² dν by quadrature; equals `amplitude_scale²`.
    pub fn normalization(&self) -> Result<f64> {
        let (a, b) = self.grid_range();
        quadrature::integrate(
            |nu| self.amplitude(nu).norm_sqr(),
            a,
            b,
            quadrature::DEFAULT_TOLERANCE * 1e-3,
        )
    }
}

/// Carrier for the mode-overlap integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverlapResult {
    pub magnitude: f64,
    pub phase: f64,
}

impl OverlapResult {
    fn from_complex(z: Complex64) -> Self {
        Self {
            magnitude: z.norm(),
            phase: z.arg(),
        }
    }

    pub fn magnitude_sqr(&self) -> f64 {
        self.magnitude * self.magnitude
    }
}

/// Closed-form overlap of two normalized Gaussian amplitudes, valid for
/// arbitrary centers, bandwidths and delays.
pub fn mode_overlap(
    wp1: &SpectralWavepacket,
    wp2: &SpectralWavepacket,
    relative_delay_ps: f64,
) -> OverlapResult {
    OverlapResult::from_complex(overlap_closed_form(wp1, wp2, relative_delay_ps))
}

fn overlap_closed_form(
    wp1: &SpectralWavepacket,
    wp2: &SpectralWavepacket,
    relative_delay_ps: f64,
) -> Complex64 {
    let (s1, s2) = (wp1.intensity_sigma_thz(), wp2.intensity_sigma_thz());
    let (c1, c2) = (1.0 / (4.0 * s1 * s1), 1.0 / (4.0 * s2 * s2));
    let a = c1 + c2;
    let mean = (c1 * wp1.center_thz + c2 * wp2.center_thz) / a;
    let detuning = wp1.center_thz - wp2.center_thz;
    let tau = relative_delay_ps + wp2.delay_ps - wp1.delay_ps;

    let norm = (2.0 * PI * s1 * s1).powf(-0.25) * (2.0 * PI * s2 * s2).powf(-0.25);
    let log_mag = -detuning * detuning / (4.0 * (s1 * s1 + s2 * s2)) - PI * PI * tau * tau / a;
    let mag = norm * (PI / a).sqrt() * log_mag.exp();
    Complex64::from_polar(mag, 2.0 * PI * mean * tau)
}

/// Gaussian form of the overlap: `|M(τ)|² = peak · exp(−(τ+t₂−t₁)²/(2σ²))`.
/// Returns `(peak, σ)` with σ in ps.
pub fn overlap_profile(wp1: &SpectralWavepacket, wp2: &SpectralWavepacket) -> (f64, f64) {
    let (s1, s2) = (wp1.intensity_sigma_thz(), wp2.intensity_sigma_thz());
    let a = 1.0 / (4.0 * s1 * s1) + 1.0 / (4.0 * s2 * s2);
    let detuning = wp1.center_thz - wp2.center_thz;
    let norm2 = (2.0 * PI * s1 * s1).powf(-0.5) * (2.0 * PI * s2 * s2).powf(-0.5);
    let peak = norm2 * (PI / a) * (-detuning * detuning / (2.0 * (s1 * s1 + s2 * s2))).exp();
    (peak, a.sqrt() / (2.0 * PI))
}

/// Same integral as [`mode_overlap`] evaluated by adaptive quadrature over
/// the union of both wavepackets' grids.
pub fn mode_overlap_numeric(
    wp1: &SpectralWavepacket,
    wp2: &SpectralWavepacket,
    relative_delay_ps: f64,
) -> Result<OverlapResult> {
    let (a1, b1) = wp1.grid_range();
    let (a2, b2) = wp2.grid_range();
    let (a, b) = (a1.min(a2), b1.max(b2));
    let n1 = wp1.amplitude_scale;
    let n2 = wp2.amplitude_scale;
    let z = quadrature::integrate_complex(
        |nu| {
            wp1.amplitude(nu).conj()
                * wp2.amplitude(nu)
                * Complex64::from_polar(1.0, 2.0 * PI * nu * relative_delay_ps)
        },
        a,
        b,
        quadrature::DEFAULT_TOLERANCE,
    )?;
    Ok(OverlapResult::from_complex(z / (n1 * n2)))
}

/// Temporal intensity of the wavepacket, normalized to integrate to
/// `amplitude_scale²`. Its 1/e half width equals the coherence σ.
pub fn temporal_intensity(wp: &SpectralWavepacket, t_ps: f64) -> f64 {
    let sigma = wp.coherence_sigma_ps();
    let x = t_ps - wp.delay_ps;
    wp.amplitude_scale * wp.amplitude_scale / (sigma * PI.sqrt()) * (-x * x / (sigma * sigma)).exp()
}

/// Two-photon joint spectral amplitude.
#[derive(Clone, Debug, PartialEq)]
pub enum JsaKind {
    /// Product state `φ₁(ν₁) φ₂(ν₂)`.
    Separable(SpectralWavepacket, SpectralWavepacket),
    /// Frequency-anticorrelated two-colour state
    /// `S(ν₁+ν₂) [D(ν₁−ν₂−Δ) + D(ν₁−ν₂+Δ)]`, symmetric under exchange of
    /// the two photons. Bandwidths are intensity FWHM.
    Anticorrelated {
        sum_center_thz: f64,
        sum_bandwidth_ghz: f64,
        difference_center_ghz: f64,
        difference_bandwidth_ghz: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointSpectralAmplitude {
    pub kind: JsaKind,
    /// Extra delay on arm 2, ps.
    pub delay_ps: f64,
}

/// Integration box in sum/difference coordinates `s = ν₁+ν₂`, `d = ν₁−ν₂`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SumDiffBox {
    pub sum_min: f64,
    pub sum_max: f64,
    /// The difference range is `[-diff_half, diff_half]`, symmetric so that
    /// the exchanged amplitude lives on the same grid.
    pub diff_half: f64,
}

fn gaussian_amp(x: f64, sigma: f64) -> f64 {
    (-x * x / (4.0 * sigma * sigma)).exp()
}

impl JointSpectralAmplitude {
    pub fn new(kind: JsaKind, delay_ps: f64) -> Result<Self> {
        if let JsaKind::Anticorrelated {
            sum_center_thz,
            sum_bandwidth_ghz,
            difference_bandwidth_ghz,
            difference_center_ghz,
        } = kind
        {
            if !(sum_bandwidth_ghz > 0.0 && difference_bandwidth_ghz > 0.0) {
                return Err(Error::domain("JSA bandwidths must be positive"));
            }
            if !(sum_center_thz > 0.0 && difference_center_ghz.is_finite()) {
                return Err(Error::domain("JSA centers must be finite and positive"));
            }
        }
        Ok(Self { kind, delay_ps })
    }

    /// Unnormalized amplitude at `(ν₁, ν₂)` in THz.
    pub fn amplitude(&self, nu1: f64, nu2: f64) -> Complex64 {
        match &self.kind {
            JsaKind::Separable(a, b) => a.amplitude(nu1) * b.amplitude(nu2),
            JsaKind::Anticorrelated {
                sum_center_thz,
                sum_bandwidth_ghz,
                difference_center_ghz,
                difference_bandwidth_ghz,
            } => {
                let ss = ghz_to_thz(*sum_bandwidth_ghz) / fwhm_per_sigma();
                let sd = ghz_to_thz(*difference_bandwidth_ghz) / fwhm_per_sigma();
                let delta = ghz_to_thz(*difference_center_ghz);
                let s = nu1 + nu2 - sum_center_thz;
                let d = nu1 - nu2;
                let diff = gaussian_amp(d - delta, sd) + gaussian_amp(d + delta, sd);
                Complex64::new(gaussian_amp(s, ss) * diff, 0.0)
            }
        }
    }

    /// Grid box spanning ±6 amplitude-sigmas in each of `s` and `d`.
    pub fn sum_diff_box(&self) -> SumDiffBox {
        let k = GRID_HALF_SPAN_SIGMAS * std::f64::consts::SQRT_2;
        match &self.kind {
            JsaKind::Separable(a, b) => {
                let (sa, sb) = (a.intensity_sigma_thz(), b.intensity_sigma_thz());
                let spread = (sa * sa + sb * sb).sqrt();
                let sc = a.center_thz + b.center_thz;
                let dc = (a.center_thz - b.center_thz).abs();
                SumDiffBox {
                    sum_min: sc - k * spread,
                    sum_max: sc + k * spread,
                    diff_half: dc + k * spread,
                }
            }
            JsaKind::Anticorrelated {
                sum_center_thz,
                sum_bandwidth_ghz,
                difference_center_ghz,
                difference_bandwidth_ghz,
            } => {
                let ss = ghz_to_thz(*sum_bandwidth_ghz) / fwhm_per_sigma();
                let sd = ghz_to_thz(*difference_bandwidth_ghz) / fwhm_per_sigma();
                SumDiffBox {
                    sum_min: sum_center_thz - k * ss,
                    sum_max: sum_center_thz + k * ss,
                    diff_half: ghz_to_thz(difference_center_ghz.abs()) + k * sd,
                }
            }
        }
    }

    /// ∬|F|² dν₁dν₂ on a Simpson tensor grid with `intervals` per axis.
    pub fn norm_on_grid(&self, intervals: usize) -> f64 {
        let bx = self.sum_diff_box();
        let ws = quadrature::simpson_weights(bx.sum_min, bx.sum_max, intervals);
        let wd = quadrature::simpson_weights(-bx.diff_half, bx.diff_half, intervals);
        let sg = quadrature::grid(bx.sum_min, bx.sum_max, intervals);
        let dg = quadrature::grid(-bx.diff_half, bx.diff_half, intervals);
        let mut total = 0.0;
        for (s, w1) in sg.iter().zip(&ws) {
            for (d, w2) in dg.iter().zip(&wd) {
                let f = self.amplitude(0.5 * (s + d), 0.5 * (s - d));
                total += w1 * w2 * f.norm_sqr();
            }
        }
        // dν₁dν₂ = ds dd / 2
        0.5 * total
    }
}
