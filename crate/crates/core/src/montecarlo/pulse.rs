//! Per-pulse event logic shared by the direct and skip-ahead samplers.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::Result;
use crate::sfg::{convert_wavepacket, Conversion};
use crate::source::{
    emitted_wavepackets, sample_emission, sample_jitter, PairStatistics, PulseEmission,
};
use crate::units::per_pulse;
use crate::wavepacket::overlap_profile;

use super::ExperimentConfig;

/// Derived per-configuration quantities.
pub struct PreparedExperiment<'a> {
    config: &'a ExperimentConfig,
    pub signal: Conversion,
    pub idler: Conversion,
    /// `|M(τ)|² = overlap_peak · exp(−τ²/2σ²)` of the converted photons.
    pub overlap_peak: f64,
    pub overlap_sigma_ps: f64,
    /// Per-pulse noise click probability of each detector.
    pub noise_probability: [f64; 2],
    pair_time: Normal<f64>,
    raman_time: Normal<f64>,
}

impl<'a> PreparedExperiment<'a> {
    pub fn new(config: &'a ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let (sig, idl) = emitted_wavepackets(&config.source)?;
        let signal = convert_wavepacket(&config.converter_signal, &sig)?;
        let idler = convert_wavepacket(&config.converter_idler, &idl)?;
        let (overlap_peak, overlap_sigma_ps) =
            overlap_profile(&signal.wavepacket, &idler.wavepacket);
        let converter_noise =
            0.5 * (config.converter_signal.noise_rate_cps + config.converter_idler.noise_rate_cps);
        let noise_probability = [0, 1].map(|k| {
            per_pulse(
                config.detectors[k].dark_rate_cps + converter_noise,
                config.repetition_rate_mhz,
            )
            .min(1.0)
        });
        Ok(Self {
            config,
            signal,
            idler,
            overlap_peak,
            overlap_sigma_ps,
            noise_probability,
            pair_time: Normal::new(0.0, config.source.pair_emission_sigma_ps()).expect("finite"),
            raman_time: Normal::new(0.0, config.source.raman_emission_sigma_ps()).expect("finite"),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        self.config
    }

    pub fn eta_signal(&self) -> f64 {
        self.signal.survival_probability
    }

    pub fn eta_idler(&self) -> f64 {
        self.idler.survival_probability
    }

    pub fn overlap_sqr(&self, tau_ps: f64) -> f64 {
        let x = tau_ps / self.overlap_sigma_ps;
        self.overlap_peak * (-0.5 * x * x).exp()
    }

    /// Routes the surviving photons (emission times per input port) through
    /// the coupler and returns the click of each detector.
    fn route_and_detect<R: Rng + ?Sized>(
        &self,
        delay_ps: f64,
        signal_times: &[f64],
        idler_times: &[f64],
        noise: [bool; 2],
        rng: &mut R,
    ) -> [bool; 2] {
        let mut at = [0u32; 2];
        if signal_times.len() == 1 && idler_times.len() == 1 {
            let tau = delay_ps + idler_times[0] - signal_times[0];
            let xi = self.config.distinguishability_overlap;
            let bunch = 0.5 * (1.0 + xi * xi * self.overlap_sqr(tau));
            if rng.random::<f64>() < bunch {
                at[usize::from(rng.random::<bool>())] = 2;
            } else {
                at = [1, 1];
            }
        } else {
            for _ in 0..signal_times.len() + idler_times.len() {
                at[usize::from(rng.random::<bool>())] += 1;
            }
        }
        let mut clicks = noise;
        for k in 0..2 {
            let eff = self.config.detectors[k].efficiency;
            for _ in 0..at[k] {
                if rng.random::<f64>() < eff {
                    clicks[k] = true;
                }
            }
        }
        clicks
    }
}

/// Direct simulation of one pulse.
pub fn simulate_pulse<R: Rng + ?Sized>(
    prep: &PreparedExperiment,
    delay_ps: f64,
    rng: &mut R,
) -> [bool; 2] {
    let emission = sample_emission(&prep.config.source, rng);
    simulate_emission(prep, &emission, delay_ps, rng)
}

/// Conversion, routing and detection for a given source emission.
pub fn simulate_emission<R: Rng + ?Sized>(
    prep: &PreparedExperiment,
    emission: &PulseEmission,
    delay_ps: f64,
    rng: &mut R,
) -> [bool; 2] {
    let (eta_s, eta_i) = (prep.eta_signal(), prep.eta_idler());
    let mut signal = Vec::new();
    let mut idler = Vec::new();
    for _ in 0..emission.n_pairs {
        let t = prep.pair_time.sample(rng);
        if rng.random::<f64>() < eta_s {
            signal.push(t + emission.jitter_offset_signal);
        }
        if rng.random::<f64>() < eta_i {
            idler.push(t + emission.jitter_offset_idler);
        }
    }
    for _ in 0..emission.n_raman_signal {
        if rng.random::<f64>() < eta_s {
            signal.push(prep.raman_time.sample(rng) + emission.jitter_offset_signal);
        }
    }
    for _ in 0..emission.n_raman_idler {
        if rng.random::<f64>() < eta_i {
            idler.push(prep.raman_time.sample(rng) + emission.jitter_offset_idler);
        }
    }
    let noise = [0, 1].map(|k| rng.random::<f64>() < prep.noise_probability[k]);
    prep.route_and_detect(delay_ps, &signal, &idler, noise, rng)
}

/// Poisson draw by inverse CDF, optionally conditioned on `n ≥ 1`.
fn poisson_small<R: Rng + ?Sized>(mean: f64, at_least_one: bool, rng: &mut R) -> u32 {
    if mean > 30.0 {
        let d = Poisson::new(mean).expect("positive mean");
        loop {
            let n = d.sample(rng) as u32;
            if n > 0 || !at_least_one {
                return n;
            }
        }
    }
    let p0 = (-mean).exp();
    let mut u: f64 = rng.random();
    let (mut n, mut p) = (0u32, p0);
    if at_least_one {
        u = p0 + u * (1.0 - p0);
    }
    let mut cdf = p0;
    while cdf < u && n < 1000 {
        n += 1;
        p *= mean / n as f64;
        cdf += p;
    }
    if at_least_one {
        n.max(1)
    } else {
        n
    }
}

const PAIRS: usize = 0;
const RAMAN_SIGNAL: usize = 1;
const RAMAN_IDLER: usize = 2;
const NOISE_1: usize = 3;
const NOISE_2: usize = 4;

/// Exact sampler over the pulses in which anything happens: a surviving
/// photon or a noise click. Gaps between such pulses are geometric, and the
/// content of an active pulse is drawn conditionally on it being active.
pub(super) struct ActiveSampler<'p, 'a> {
    prep: &'p PreparedExperiment<'a>,
    /// Probability that each independent component is empty.
    idle: [f64; 5],
    ln_all_idle: f64,
    pair_any: f64,
    signal: Vec<f64>,
    idler: Vec<f64>,
}

impl<'p, 'a> ActiveSampler<'p, 'a> {
    pub(super) fn new(prep: &'p PreparedExperiment<'a>) -> Self {
        let src = &prep.config.source;
        let (eta_s, eta_i) = (prep.eta_signal(), prep.eta_idler());
        let pair_any = 1.0 - (1.0 - eta_s) * (1.0 - eta_i);
        let idle = [
            src.pair_statistics
                .prob_no_survivor(src.mean_pairs_per_pulse, pair_any),
            (-src.raman_signal() * eta_s).exp(),
            (-src.raman_idler() * eta_i).exp(),
            1.0 - prep.noise_probability[0],
            1.0 - prep.noise_probability[1],
        ];
        let ln_all_idle = idle.iter().map(|q| q.ln()).sum();
        Self {
            prep,
            idle,
            ln_all_idle,
            pair_any,
            signal: Vec::new(),
            idler: Vec::new(),
        }
    }

    pub(super) fn start_can_click(&self, start: usize) -> bool {
        let noise = self.prep.noise_probability[start] > 0.0;
        let photons = self.prep.config.detectors[start].efficiency > 0.0 && self.ln_all_idle < 0.0;
        noise || photons
    }

    /// Number of pulses up to and including the next active one.
    /// `u64::MAX` when nothing can ever happen.
    pub(super) fn next_gap<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.ln_all_idle == 0.0 {
            return u64::MAX;
        }
        if self.ln_all_idle == f64::NEG_INFINITY {
            return 1;
        }
        let u = 1.0 - rng.random::<f64>();
        let extra = (u.ln() / self.ln_all_idle).floor();
        if extra >= (u64::MAX - 1) as f64 {
            u64::MAX
        } else {
            1 + extra as u64
        }
    }

    fn first_active<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let p_active = -self.ln_all_idle.exp_m1();
        let u = rng.random::<f64>() * p_active;
        let mut before = 1.0;
        let mut acc = 0.0;
        for (k, q) in self.idle.iter().enumerate() {
            acc += before * (1.0 - q);
            if u < acc {
                return k;
            }
            before *= q;
        }
        // rounding at the top end
        self.idle.iter().rposition(|q| *q < 1.0).unwrap_or(NOISE_2)
    }

    pub(super) fn active_pulse<R: Rng + ?Sized>(
        &mut self,
        delay_ps: f64,
        rng: &mut R,
    ) -> [bool; 2] {
        let prep = self.prep;
        let src = &prep.config.source;
        let (eta_s, eta_i) = (prep.eta_signal(), prep.eta_idler());
        let first = self.first_active(rng);
        let jitter_s = sample_jitter(src.timing_jitter_sigma_ps, rng);
        let jitter_i = sample_jitter(src.timing_jitter_sigma_ps, rng);
        self.signal.clear();
        self.idler.clear();

        if first == PAIRS {
            let stats: PairStatistics = src.pair_statistics;
            let n = stats.sample_given_survivor(src.mean_pairs_per_pulse, self.pair_any, rng);
            // index of the first pair with a surviving photon
            let lost = 1.0 - self.pair_any;
            let total_active = -(n as f64 * lost.ln()).exp_m1();
            let u = rng.random::<f64>() * total_active;
            let (mut k, mut acc, mut before) = (0u32, 0.0, 1.0);
            while k + 1 < n {
                acc += before * self.pair_any;
                if u < acc {
                    break;
                }
                before *= lost;
                k += 1;
            }
            for j in k..n {
                let (s, i) = if j == k {
                    let both = eta_s * eta_i;
                    let s_only = eta_s * (1.0 - eta_i);
                    let v = rng.random::<f64>() * self.pair_any;
                    if v < both {
                        (true, true)
                    } else if v < both + s_only {
                        (true, false)
                    } else {
                        (false, true)
                    }
                } else {
                    (rng.random::<f64>() < eta_s, rng.random::<f64>() < eta_i)
                };
                if s || i {
                    let t = prep.pair_time.sample(rng);
                    if s {
                        self.signal.push(t + jitter_s);
                    }
                    if i {
                        self.idler.push(t + jitter_i);
                    }
                }
            }
        }
        if first <= RAMAN_SIGNAL {
            let n = poisson_small(src.raman_signal() * eta_s, first == RAMAN_SIGNAL, rng);
            for _ in 0..n {
                self.signal.push(prep.raman_time.sample(rng) + jitter_s);
            }
        }
        if first <= RAMAN_IDLER {
            let n = poisson_small(src.raman_idler() * eta_i, first == RAMAN_IDLER, rng);
            for _ in 0..n {
                self.idler.push(prep.raman_time.sample(rng) + jitter_i);
            }
        }
        let noise1 = first == NOISE_1
            || (first < NOISE_1 && rng.random::<f64>() < prep.noise_probability[0]);
        let noise2 = first == NOISE_2 || rng.random::<f64>() < prep.noise_probability[1];
        prep.route_and_detect(delay_ps, &self.signal, &self.idler, [noise1, noise2], rng)
    }
}
