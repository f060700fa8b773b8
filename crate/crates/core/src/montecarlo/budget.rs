//! Analytic coincidence budget by enumeration of surviving photon numbers.
//!
//! After conversion the photons of a pulse fall into five independent-ish
//! groups: pairs with both photons surviving, pairs with only the signal or
//! only the idler surviving, and surviving Raman photons in either channel.
//! Every joint outcome with at most three photons per coupler input is
//! enumerated, routed exactly (two-photon interference for one photon per
//! port, independent 50/50 splitting otherwise) and detected with noise.

use serde::Serialize;

use crate::error::Result;
use crate::fit::fit_points;
use crate::source::{ln_factorial, poisson_pmf, PairStatistics};

use super::{ExperimentConfig, PreparedExperiment};

const MAX_PER_PORT: u32 = 3;
/// Relative truncation error above which the budget is flagged.
pub const TRUNCATION_WARNING: f64 = 1e-4;

/// Coincidence probability per pulse, split by cause.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct BudgetBreakdown {
    /// Both photons of a single pair, nothing else present.
    pub interfering_pair: f64,
    /// Photons from two or more pairs, no Raman photon.
    pub multi_pair: f64,
    /// Any outcome containing a Raman photon.
    pub raman: f64,
    /// Extra coincidences caused by dark or converter-noise clicks.
    pub dark: f64,
    pub total: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpectedRates {
    pub coincidence: BudgetBreakdown,
    /// Probability per pulse that the start detector clicks.
    pub start: f64,
    /// Enumerated probability mass that was left out.
    pub truncated_mass: f64,
}

impl ExpectedRates {
    pub fn coincidences_per_start(&self) -> f64 {
        self.coincidence.total / self.start
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VisibilityBudget {
    /// Far-delay (distinguishable) rates.
    pub baseline: ExpectedRates,
    /// Zero-delay rates.
    pub floor: ExpectedRates,
    /// `1 − (coincidences/start at 0) / (coincidences/start far away)`.
    pub visibility: f64,
    /// Expected coincidences at the dip bottom as a fraction of the baseline.
    pub floor_fraction: f64,
    /// Dip-model fit to the expected curve at the configured delays.
    pub visibility_fit: Option<f64>,
    pub sigma_fit_ps: Option<f64>,
    /// Truncated mass relative to the baseline coincidence probability.
    pub truncation_error: f64,
    pub truncation_warning: bool,
}

fn binomial(n: u32, k: u32) -> f64 {
    (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)).exp()
}

/// Joint probability of `both`, `s_only` and `i_only` surviving pairs.
fn pair_outcome_pmf(
    stats: PairStatistics,
    mean: f64,
    eta_s: f64,
    eta_i: f64,
    both: u32,
    s_only: u32,
    i_only: u32,
) -> f64 {
    let pb = eta_s * eta_i;
    let ps = eta_s * (1.0 - eta_i);
    let pi = (1.0 - eta_s) * eta_i;
    let p0 = (1.0 - eta_s) * (1.0 - eta_i);
    let ln_term = |count: u32, p: f64| {
        if count == 0 {
            0.0
        } else {
            count as f64 * p.ln()
        }
    };
    let fixed = both + s_only + i_only;
    let base = ln_term(both, pb) + ln_term(s_only, ps) + ln_term(i_only, pi)
        - ln_factorial(both)
        - ln_factorial(s_only)
        - ln_factorial(i_only);
    let mut total = 0.0;
    let mut n = fixed;
    loop {
        let rest = n - fixed;
        let pn = stats.pmf(n, mean);
        let ln_rest = if rest == 0 {
            0.0
        } else {
            rest as f64 * p0.ln()
        } - ln_factorial(rest);
        let term = pn * (base + ln_factorial(n) + ln_rest).exp();
        if term.is_finite() {
            total += term;
        }
        let beyond_mean = n as f64 > 10.0 * (mean + 1.0);
        if (beyond_mean && pn < 1e-20) || n > 5_000 {
            break;
        }
        n += 1;
    }
    total
}

/// Expected per-pulse rates at a given set delay.
pub fn expected_rates(prep: &PreparedExperiment, delay_ps: f64) -> ExpectedRates {
    let config = prep.config();
    let src = &config.source;
    let (eta_s, eta_i) = (prep.eta_signal(), prep.eta_idler());
    let (rs_mean, ri_mean) = (src.raman_signal() * eta_s, src.raman_idler() * eta_i);
    let start = usize::from(config.tia.start_detector - 1);
    let eff = [
        config.detectors[0].efficiency,
        config.detectors[1].efficiency,
    ];
    let noise = prep.noise_probability;
    let xi2 = config.distinguishability_overlap.powi(2);

    let jitter_var = 2.0 * src.timing_jitter_sigma_ps.powi(2);
    let pair_var = src.pair_emission_sigma_ps().powi(2);
    let raman_var = src.raman_emission_sigma_ps().powi(2);
    let sm2 = prep.overlap_sigma_ps.powi(2);
    // ⟨|M(τ + Δ)|²⟩ for a Gaussian timing difference Δ of variance v
    let mean_overlap = |v: f64| {
        let s2 = sm2 + v;
        prep.overlap_peak * (sm2 / s2).sqrt() * (-delay_ps * delay_ps / (2.0 * s2)).exp()
    };

    let click = |k: usize, n: u32, with_noise: bool| {
        let q = if with_noise { 1.0 - noise[k] } else { 1.0 };
        1.0 - q * (1.0 - eff[k]).powi(n as i32)
    };

    let mut out = BudgetBreakdown::default();
    let mut start_prob = 0.0;
    let mut covered = 0.0;

    for both in 0..=MAX_PER_PORT {
        for s_only in 0..=MAX_PER_PORT - both {
            for i_only in 0..=MAX_PER_PORT - both {
                let p_pairs = pair_outcome_pmf(
                    src.pair_statistics,
                    src.mean_pairs_per_pulse,
                    eta_s,
                    eta_i,
                    both,
                    s_only,
                    i_only,
                );
                if p_pairs == 0.0 {
                    continue;
                }
                for rs in 0..=MAX_PER_PORT - both - s_only {
                    for ri in 0..=MAX_PER_PORT - both - i_only {
                        let w = p_pairs * poisson_pmf(rs, rs_mean) * poisson_pmf(ri, ri_mean);
                        if w == 0.0 {
                            continue;
                        }
                        covered += w;
                        let ns = both + s_only + rs;
                        let ni = both + i_only + ri;

                        // routing: list of (probability, photons at det 1, photons at det 2)
                        let mut routes: Vec<(f64, u32, u32)> = Vec::new();
                        if ns == 1 && ni == 1 {
                            let var = if both == 1 {
                                jitter_var
                            } else {
                                let vs = if s_only == 1 { pair_var } else { raman_var };
                                let vi = if i_only == 1 { pair_var } else { raman_var };
                                vs + vi + jitter_var
                            };
                            let bunch = 0.5 * (1.0 + xi2 * mean_overlap(var));
                            routes.push((1.0 - bunch, 1, 1));
                            routes.push((0.5 * bunch, 2, 0));
                            routes.push((0.5 * bunch, 0, 2));
                        } else {
                            let n = ns + ni;
                            let half_n = 0.5f64.powi(n as i32);
                            for k in 0..=n {
                                routes.push((binomial(n, k) * half_n, k, n - k));
                            }
                        }

                        let mut coinc = 0.0;
                        let mut photon_only = 0.0;
                        let mut st = 0.0;
                        for &(p, n1, n2) in &routes {
                            coinc += p * click(0, n1, true) * click(1, n2, true);
                            photon_only += p * click(0, n1, false) * click(1, n2, false);
                            st += p * click(start, if start == 0 { n1 } else { n2 }, true);
                        }
                        start_prob += w * st;
                        out.total += w * coinc;
                        out.dark += w * (coinc - photon_only);
                        let photon_only = w * photon_only;
                        if rs + ri > 0 {
                            out.raman += photon_only;
                        } else if both == 1 && s_only == 0 && i_only == 0 {
                            out.interfering_pair += photon_only;
                        } else {
                            out.multi_pair += photon_only;
                        }
                    }
                }
            }
        }
    }
    ExpectedRates {
        coincidence: out,
        start: start_prob,
        truncated_mass: (1.0 - covered).max(0.0),
    }
}

/// Expected coincidence counts at each delay for `n_start_pulses` starts.
pub fn predicted_counts(prep: &PreparedExperiment, delays_ps: &[f64]) -> Vec<f64> {
    let n = prep.config().n_start_pulses as f64;
    delays_ps
        .iter()
        .map(|&d| n * expected_rates(prep, d).coincidences_per_start())
        .collect()
}

pub fn visibility_budget(config: &ExperimentConfig) -> Result<VisibilityBudget> {
    let prep = PreparedExperiment::new(config)?;
    let baseline = expected_rates(&prep, f64::INFINITY);
    let floor = expected_rates(&prep, 0.0);
    let floor_fraction = floor.coincidences_per_start() / baseline.coincidences_per_start();
    let truncation_error = baseline.truncated_mass / baseline.coincidence.total;

    let counts = predicted_counts(&prep, &config.delays_ps);
    let points: Vec<(f64, f64)> = config.delays_ps.iter().copied().zip(counts).collect();
    let fitted = fit_points(&points).ok().filter(|f| f.converged);

    Ok(VisibilityBudget {
        baseline,
        floor,
        visibility: 1.0 - floor_fraction,
        floor_fraction,
        visibility_fit: fitted.as_ref().map(|f| f.visibility.value),
        sigma_fit_ps: fitted.as_ref().map(|f| f.sigma_ps.value),
        truncation_error,
        truncation_warning: !(truncation_error <= TRUNCATION_WARNING),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_pmf_matches_poisson_thinning() {
        let (mu, es, ei) = (0.3, 0.4, 0.7);
        for (b, s, i) in [(0, 0, 0), (1, 0, 0), (0, 2, 1), (2, 1, 0)] {
            let direct = poisson_pmf(b, mu * es * ei)
                * poisson_pmf(s, mu * es * (1.0 - ei))
                * poisson_pmf(i, mu * (1.0 - es) * ei);
            let enumerated = pair_outcome_pmf(PairStatistics::Poisson, mu, es, ei, b, s, i);
            assert!(
                (direct - enumerated).abs() < 1e-14,
                "{b}{s}{i}: {direct} {enumerated}"
            );
        }
    }

    #[test]
    fn noise_free_single_pairs_give_unit_visibility() {
        let mut c = ExperimentConfig::paper_default();
        c.source.mean_pairs_per_pulse = 1e-6;
        c.source.raman_mean_signal = Some(0.0);
        c.source.raman_mean_idler = Some(0.0);
        c.converter_signal.noise_rate_cps = 0.0;
        c.converter_idler.noise_rate_cps = 0.0;
        c.detectors[0].dark_rate_cps = 0.0;
        c.detectors[1].dark_rate_cps = 0.0;
        let b = visibility_budget(&c).unwrap();
        assert!(b.visibility > 0.9999, "{}", b.visibility);
        assert!(!b.truncation_warning);
    }

    #[test]
    fn paper_default_breakdown_is_consistent() {
        let c = ExperimentConfig::paper_default();
        let b = visibility_budget(&c).unwrap();
        let bd = b.baseline.coincidence;
        let sum = bd.interfering_pair + bd.multi_pair + bd.raman + bd.dark;
        assert!((sum - bd.total).abs() < 1e-15);
        assert!(
            b.visibility > 0.6 && b.visibility < 0.85,
            "{}",
            b.visibility
        );
        assert!(b.floor.coincidence.interfering_pair < 1e-3 * bd.interfering_pair);
    }
}
