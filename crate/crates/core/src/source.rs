//! Four-wave-mixing photon-pair source.

use rand::Rng;
use rand_distr::{Distribution, Geometric, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{fwhm_per_sigma, thz_to_ghz, transform_limited_bandwidth_ghz};
use crate::wavepacket::{JointSpectralAmplitude, JsaKind, SpectralWavepacket};

/// Photon-number statistics of the pairs emitted in one pulse.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairStatistics {
    #[default]
    Poisson,
    /// Single-mode thermal (geometric) statistics.
    Thermal,
}

impl PairStatistics {
    pub fn pmf(self, n: u32, mean: f64) -> f64 {
        if mean == 0.0 {
            return if n == 0 { 1.0 } else { 0.0 };
        }
        match self {
            PairStatistics::Poisson => {
                let ln = -mean + n as f64 * mean.ln() - ln_factorial(n);
                ln.exp()
            }
            PairStatistics::Thermal => {
                let ln = n as f64 * mean.ln() - (n as f64 + 1.0) * mean.ln_1p();
                ln.exp()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, mean: f64, rng: &mut R) -> u32 {
        if mean <= 0.0 {
            return 0;
        }
        match self {
            PairStatistics::Poisson => {
                Poisson::new(mean).expect("positive mean").sample(rng) as u32
            }
            PairStatistics::Thermal => Geometric::new(1.0 / (1.0 + mean))
                .expect("valid p")
                .sample(rng) as u32,
        }
    }

    /// Probability that none of the pairs leaves a surviving photon when each
    /// pair independently survives (at least partly) with probability `a`.
    pub fn prob_no_survivor(self, mean: f64, a: f64) -> f64 {
        match self {
            PairStatistics::Poisson => (-mean * a).exp(),
            PairStatistics::Thermal => 1.0 / (1.0 + mean * a),
        }
    }

    /// Draws the pair number conditioned on at least one pair surviving.
    pub fn sample_given_survivor<R: Rng + ?Sized>(self, mean: f64, a: f64, rng: &mut R) -> u32 {
        let active = 1.0 - self.prob_no_survivor(mean, a);
        let u: f64 = rng.random::<f64>() * active;
        let ln_keep = (-a).ln_1p();
        let mut acc = 0.0;
        let mut n = 1u32;
        loop {
            let p_any = -(n as f64 * ln_keep).exp_m1();
            acc += self.pmf(n, mean) * p_any;
            if acc >= u || n >= 10_000 {
                return n;
            }
            n += 1;
        }
    }
}

pub(crate) fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

pub fn poisson_pmf(n: u32, mean: f64) -> f64 {
    PairStatistics::Poisson.pmf(n, mean)
}

fn default_pump_wavelength() -> f64 {
    1551.1
}
fn default_pump_pulse() -> f64 {
    100.0
}
fn default_signal() -> f64 {
    193.676
}
fn default_idler() -> f64 {
    192.879
}
fn default_channel() -> f64 {
    25.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    #[serde(default = "default_pump_wavelength")]
    pub pump_wavelength_nm: f64,
    #[serde(default = "default_pump_pulse")]
    pub pump_pulse_fwhm_ps: f64,
    pub mean_pairs_per_pulse: f64,
    #[serde(default = "default_signal")]
    pub signal_center_thz: f64,
    #[serde(default = "default_idler")]
    pub idler_center_thz: f64,
    #[serde(default = "default_channel")]
    pub channel_fwhm_ghz: f64,
    /// Raman photons per pulse in the signal channel; defaults to μ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raman_mean_signal: Option<f64>,
    /// Raman photons per pulse in the idler channel; defaults to μ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raman_mean_idler: Option<f64>,
    #[serde(default)]
    pub timing_jitter_sigma_ps: f64,
    #[serde(default)]
    pub pair_statistics: PairStatistics,
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self {
            pump_wavelength_nm: default_pump_wavelength(),
            pump_pulse_fwhm_ps: default_pump_pulse(),
            mean_pairs_per_pulse: 0.05,
            signal_center_thz: default_signal(),
            idler_center_thz: default_idler(),
            channel_fwhm_ghz: default_channel(),
            raman_mean_signal: None,
            raman_mean_idler: None,
            timing_jitter_sigma_ps: 0.0,
            pair_statistics: PairStatistics::Poisson,
        }
    }
}

impl SourceSpec {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("mean_pairs_per_pulse", self.mean_pairs_per_pulse),
            ("raman_mean_signal", self.raman_signal()),
            ("raman_mean_idler", self.raman_idler()),
            ("timing_jitter_sigma_ps", self.timing_jitter_sigma_ps),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        let positive = [
            ("pump_wavelength_nm", self.pump_wavelength_nm),
            ("pump_pulse_fwhm_ps", self.pump_pulse_fwhm_ps),
            ("signal_center_thz", self.signal_center_thz),
            ("idler_center_thz", self.idler_center_thz),
            ("channel_fwhm_ghz", self.channel_fwhm_ghz),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn raman_signal(&self) -> f64 {
        self.raman_mean_signal.unwrap_or(self.mean_pairs_per_pulse)
    }

    pub fn raman_idler(&self) -> f64 {
        self.raman_mean_idler.unwrap_or(self.mean_pairs_per_pulse)
    }

    /// rms of the pump intensity envelope, ps.
    pub fn pump_sigma_ps(&self) -> f64 {
        self.pump_pulse_fwhm_ps / fwhm_per_sigma()
    }

    /// rms spread of pair emission times. Pair generation scales with the
    /// square of the pump intensity.
    pub fn pair_emission_sigma_ps(&self) -> f64 {
        self.pump_sigma_ps() / std::f64::consts::SQRT_2
    }

    /// rms spread of Raman emission times (linear in pump intensity).
    pub fn raman_emission_sigma_ps(&self) -> f64 {
        self.pump_sigma_ps()
    }
}

/// One Monte Carlo draw of the source output for a single pulse.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PulseEmission {
    pub n_pairs: u32,
    pub n_raman_signal: u32,
    pub n_raman_idler: u32,
    pub jitter_offset_signal: f64,
    pub jitter_offset_idler: f64,
}

pub fn sample_jitter<R: Rng + ?Sized>(sigma_ps: f64, rng: &mut R) -> f64 {
    if sigma_ps > 0.0 {
        Normal::new(0.0, sigma_ps)
            .expect("finite sigma")
            .sample(rng)
    } else {
        0.0
    }
}

pub fn sample_emission<R: Rng + ?Sized>(spec: &SourceSpec, rng: &mut R) -> PulseEmission {
    let n_pairs = spec.pair_statistics.sample(spec.mean_pairs_per_pulse, rng);
    let n_raman_signal = PairStatistics::Poisson.sample(spec.raman_signal(), rng);
    let n_raman_idler = PairStatistics::Poisson.sample(spec.raman_idler(), rng);
    PulseEmission {
        n_pairs,
        n_raman_signal,
        n_raman_idler,
        jitter_offset_signal: sample_jitter(spec.timing_jitter_sigma_ps, rng),
        jitter_offset_idler: sample_jitter(spec.timing_jitter_sigma_ps, rng),
    }
}

/// Signal and idler single-photon wavepackets of the filtered channels.
pub fn emitted_wavepackets(spec: &SourceSpec) -> Result<(SpectralWavepacket, SpectralWavepacket)> {
    Ok((
        SpectralWavepacket::new(spec.signal_center_thz, spec.channel_fwhm_ghz)?,
        SpectralWavepacket::new(spec.idler_center_thz, spec.channel_fwhm_ghz)?,
    ))
}

/// Frequency-anticorrelated joint spectrum of the pair. The sum frequency
/// is pinned by the pump pulse; the difference frequency has the width of
/// two independent channel-filtered photons.
pub fn anticorrelated_jsa(spec: &SourceSpec) -> Result<JointSpectralAmplitude> {
    spec.validate()?;
    JointSpectralAmplitude::new(
        JsaKind::Anticorrelated {
            sum_center_thz: spec.signal_center_thz + spec.idler_center_thz,
            sum_bandwidth_ghz: transform_limited_bandwidth_ghz(spec.pump_pulse_fwhm_ps),
            difference_center_ghz: thz_to_ghz(spec.signal_center_thz - spec.idler_center_thz),
            difference_bandwidth_ghz: std::f64::consts::SQRT_2 * spec.channel_fwhm_ghz,
        },
        0.0,
    )
}
