//! Unit conversions. Internal frequency unit is THz, time unit is ps.

use std::f64::consts::{LN_2, PI};

/// Speed of light in nm·THz.
pub const SPEED_OF_LIGHT_NM_THZ: f64 = 299_792.458;

pub const GHZ_PER_THZ: f64 = 1_000.0;

/// Intensity FWHM of a Gaussian divided by its standard deviation.
pub fn fwhm_per_sigma() -> f64 {
    2.0 * (2.0 * LN_2).sqrt()
}

pub fn ghz_to_thz(ghz: f64) -> f64 {
    ghz / GHZ_PER_THZ
}

pub fn thz_to_ghz(thz: f64) -> f64 {
    thz * GHZ_PER_THZ
}

pub fn wavelength_nm_to_thz(nm: f64) -> f64 {
    SPEED_OF_LIGHT_NM_THZ / nm
}

/// Intensity FWHM of a transform-limited Gaussian pulse (in GHz) for a
/// given temporal intensity FWHM (in ps). The product is `2 ln2 / π`.
pub fn transform_limited_bandwidth_ghz(pulse_fwhm_ps: f64) -> f64 {
    thz_to_ghz(2.0 * LN_2 / PI / pulse_fwhm_ps)
}

/// Counts per second to counts per pulse at `repetition_rate_mhz`.
pub fn per_pulse(rate_cps: f64, repetition_rate_mhz: f64) -> f64 {
    rate_cps / (repetition_rate_mhz * 1e6)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pump_wavelength_matches_channel_midpoint() {
        let pump = wavelength_nm_to_thz(1551.1);
        let mid = 0.5 * (193.676 + 192.879);
        assert!((pump - mid).abs() < 1e-3, "{pump} vs {mid}");
    }

    #[test]
    fn time_bandwidth_product() {
        let bw = transform_limited_bandwidth_ghz(100.0);
        assert!((bw - 4.413).abs() < 1e-3);
    }
}
