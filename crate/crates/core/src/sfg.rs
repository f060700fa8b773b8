//! Quantum frequency up-conversion by sum-frequency generation.
//!
//! With an undepleted pump the long-wavelength mode `a_L` and the
//! sum-frequency mode `a_S` obey `da_L/dt = −χ a_S`, `da_S/dt = χ a_L`,
//! a rotation by the angle `θ = χt`. The mean SFG photon number is
//! `⟨n_S⟩ = ⟨n_S0⟩ cos²θ + ⟨n_L0⟩ sin²θ`, so a converter with an empty
//! output mode never emits photons on its own.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::units::{fwhm_per_sigma, ghz_to_thz};
use crate::wavepacket::SpectralWavepacket;

/// Survival probabilities below this are reported as zero.
pub const SURVIVAL_FLOOR: f64 = 1e-12;

/// Optional sinusoidal ripple on the phase-matching response. The response
/// is multiplied by `1 − depth·(1 + sin(2π(f − f_c)/period + phase))/2`,
/// which stays within `[1 − depth, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ripple {
    pub depth: f64,
    pub period_ghz: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConverterSpec {
    pub pump_frequency_thz: f64,
    /// End-to-end conversion efficiency at the response center, `sin²(χt)`.
    pub peak_efficiency: f64,
    /// Input-side center of the phase-matching response.
    pub response_center_thz: f64,
    /// Intensity FWHM of the response; `None` means spectrally flat.
    pub response_fwhm_ghz: Option<f64>,
    /// Spurious pump-induced noise reaching the detectors, counts/s.
    #[serde(default)]
    pub noise_rate_cps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ripple: Option<Ripple>,
    /// Pump power in mW. Recorded only; no power-to-χ map is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump_power_mw: Option<f64>,
}

impl ConverterSpec {
    /// Converter matched to an input photon at `input_center_thz`.
    pub fn matched(
        input_center_thz: f64,
        pump_frequency_thz: f64,
        peak_efficiency: f64,
        response_fwhm_ghz: f64,
    ) -> Self {
        Self {
            pump_frequency_thz,
            peak_efficiency,
            response_center_thz: input_center_thz,
            response_fwhm_ghz: Some(response_fwhm_ghz),
            noise_rate_cps: 0.0,
            ripple: None,
            pump_power_mw: None,
        }
    }

    /// Lossless, flat, zero-shift converter: the photon passes unchanged.
    pub fn identity() -> Self {
        Self {
            pump_frequency_thz: 0.0,
            peak_efficiency: 1.0,
            response_center_thz: 1.0,
            response_fwhm_ghz: None,
            noise_rate_cps: 0.0,
            ripple: None,
            pump_power_mw: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.peak_efficiency) {
            return Err(Error::domain(format!(
                "peak_efficiency must lie in [0, 1], got {}",
                self.peak_efficiency
            )));
        }
        if let Some(w) = self.response_fwhm_ghz {
            if !(w > 0.0) {
                return Err(Error::domain(format!(
                    "response_fwhm_ghz must be > 0, got {w}"
                )));
            }
        }
        if !(self.noise_rate_cps >= 0.0) {
            return Err(Error::domain("noise_rate_cps must be >= 0"));
        }
        if !(self.pump_frequency_thz >= 0.0 && self.pump_frequency_thz.is_finite()) {
            return Err(Error::domain("pump_frequency_thz must be finite and >= 0"));
        }
        if let Some(r) = self.ripple {
            if !(0.0..=1.0).contains(&r.depth) || !(r.period_ghz > 0.0) {
                return Err(Error::domain(
                    "ripple depth must be in [0,1] and period > 0",
                ));
            }
        }
        Ok(())
    }

    /// Conversion angle `θ = χt` with `sin²θ = peak_efficiency`.
    pub fn theta(&self) -> f64 {
        self.peak_efficiency.sqrt().asin()
    }

    /// Normalized phase-matching response `R(f)`, `R(center) = 1`.
    pub fn response(&self, input_frequency_thz: f64) -> f64 {
        let base = match self.response_fwhm_ghz {
            None => 1.0,
            Some(w) => {
                let x = (input_frequency_thz - self.response_center_thz) / ghz_to_thz(w);
                (-4.0 * LN_2 * x * x).exp()
            }
        };
        match self.ripple {
            None => base,
            Some(r) => {
                let arg = 2.0 * PI * (input_frequency_thz - self.response_center_thz)
                    / ghz_to_thz(r.period_ghz)
                    + r.phase_rad;
                base * (1.0 - r.depth * 0.5 * (1.0 + arg.sin()))
            }
        }
    }
}

/// Coherent amplitudes of the long-wavelength and SFG modes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModePairState {
    pub amplitude_l: Complex64,
    pub amplitude_s: Complex64,
}

impl ModePairState {
    pub fn new(amplitude_l: Complex64, amplitude_s: Complex64) -> Self {
        Self {
            amplitude_l,
            amplitude_s,
        }
    }

    pub fn real(l: f64, s: f64) -> Self {
        Self::new(Complex64::new(l, 0.0), Complex64::new(s, 0.0))
    }

    pub fn total_number(&self) -> f64 {
        self.amplitude_l.norm_sqr() + self.amplitude_s.norm_sqr()
    }

    fn derivative(&self, chi: f64) -> (Complex64, Complex64) {
        (-self.amplitude_s * chi, self.amplitude_l * chi)
    }

    fn axpy(&self, h: f64, k: (Complex64, Complex64)) -> Self {
        Self::new(self.amplitude_l + k.0 * h, self.amplitude_s + k.1 * h)
    }
}

/// Closed-form two-mode rotation by `theta`.
pub fn evolve_modes(state: ModePairState, theta: f64) -> ModePairState {
    let (s, c) = theta.sin_cos();
    ModePairState::new(
        state.amplitude_l * c - state.amplitude_s * s,
        state.amplitude_s * c + state.amplitude_l * s,
    )
}

/// Fixed-step RK4 integration of the Heisenberg equations up to time `t`.
/// Requires `0 < dt ≤ t/1000` (any positive `dt` when `t = 0`).
pub fn integrate_heisenberg(
    state: ModePairState,
    chi: f64,
    t: f64,
    dt: f64,
) -> Result<ModePairState> {
    if !(dt > 0.0) {
        return Err(Error::domain(format!(
            "time step must be positive, got {dt}"
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!(
            "duration must be finite and >= 0, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(state);
    }
    if dt > t / 1000.0 * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "time step {dt} exceeds t/1000 = {}",
            t / 1000.0
        )));
    }
    let steps = (t / dt).ceil() as usize;
    let h = t / steps as f64;
    let mut y = state;
    for _ in 0..steps {
        let k1 = y.derivative(chi);
        let k2 = y.axpy(0.5 * h, k1).derivative(chi);
        let k3 = y.axpy(0.5 * h, k2).derivative(chi);
        let k4 = y.axpy(h, k3).derivative(chi);
        y = ModePairState::new(
            y.amplitude_l + (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (h / 6.0),
            y.amplitude_s + (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * (h / 6.0),
        );
    }
    Ok(y)
}

/// `⟨n_S⟩ = ⟨n_S0⟩ cos²θ + ⟨n_L0⟩ sin²θ`.
pub fn mean_sfg_photons(mean_s0: f64, mean_l0: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    mean_s0 * c * c + mean_l0 * s * s
}

/// SFG photons produced from vacuum at any conversion angle: always zero.
pub fn spontaneous_noise_in_ideal_sfg(theta: f64) -> f64 {
    mean_sfg_photons(0.0, 0.0, theta)
}

/// `η(f) = peak_efficiency · R(f)`.
pub fn conversion_efficiency(spec: &ConverterSpec, input_frequency_thz: f64) -> f64 {
    spec.peak_efficiency * spec.response(input_frequency_thz)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conversion {
    pub wavepacket: SpectralWavepacket,
    pub survival_probability: f64,
    /// Set when the survival probability fell below [`SURVIVAL_FLOOR`] and
    /// was reported as zero.
    pub extinguished: bool,
}

/// Up-converts a photon. The output amplitude is `φ_in(ν)·√R(ν)`
/// renormalized and translated by the pump frequency; the survival
/// probability is `∫|φ_in|² η dν`.
pub fn convert_wavepacket(spec: &ConverterSpec, wp: &SpectralWavepacket) -> Result<Conversion> {
    spec.validate()?;
    let s_in = wp.intensity_sigma_thz();
    let (shift, fwhm_out, gaussian_survival) = match spec.response_fwhm_ghz {
        None => (0.0, wp.fwhm_ghz(), 1.0),
        Some(w) => {
            let rho = ghz_to_thz(w) / fwhm_per_sigma();
            let (v_in, v_r) = (s_in * s_in, rho * rho);
            let v_out = v_in * v_r / (v_in + v_r);
            let offset = spec.response_center_thz - wp.center_thz();
            let survival =
                rho / (v_in + v_r).sqrt() * (-offset * offset / (2.0 * (v_in + v_r))).exp();
            (
                offset * v_out / v_r,
                v_out.sqrt() * fwhm_per_sigma() * 1e3,
                survival,
            )
        }
    };
    let mut survival = spec.peak_efficiency * gaussian_survival;
    if spec.ripple.is_some() {
        let (a, b) = wp.grid_range();
        let scale2 = wp.amplitude_scale() * wp.amplitude_scale();
        survival = quadrature::integrate(
            |nu| wp.amplitude(nu).norm_sqr() * conversion_efficiency(spec, nu),
            a,
            b,
            quadrature::DEFAULT_TOLERANCE * 1e-3,
        )? / scale2;
    }
    let extinguished = survival < SURVIVAL_FLOOR;
    if extinguished {
        survival = 0.0;
    }
    let center = (wp.center_thz() + shift) + spec.pump_frequency_thz;
    let out = SpectralWavepacket::new(center, fwhm_out)?
        .with_delay(wp.delay_ps())
        .with_amplitude_scale(wp.amplitude_scale());
    Ok(Conversion {
        wavepacket: out,
        survival_probability: survival,
        extinguished,
    })
}
