//! End-to-end Monte Carlo of the up-conversion HOM experiment and its
//! analytic visibility budget.
//!
//! Each pulse emits pairs and Raman photons, every photon independently
//! survives its converter, the survivors meet at the 50/50 coupler and two
//! silicon detectors with dark/noise clicks feed a start/stop coincidence
//! counter. A coincidence is both detectors clicking on the same pulse.

mod budget;
mod pulse;

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hom::validate_delays;
use crate::sfg::ConverterSpec;
use crate::source::SourceSpec;

pub use budget::{
    expected_rates, predicted_counts, visibility_budget, BudgetBreakdown, ExpectedRates,
    VisibilityBudget,
};
pub use pulse::{simulate_emission, simulate_pulse, PreparedExperiment};

pub const DEFAULT_PULSE_CAP: u64 = 10_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSpec {
    pub efficiency: f64,
    pub dark_rate_cps: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TiaSpec {
    pub coincidence_window_ns: f64,
    /// 1 or 2.
    pub start_detector: u8,
}

fn default_overlap() -> f64 {
    1.0
}

fn default_pulse_cap() -> u64 {
    DEFAULT_PULSE_CAP
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: SourceSpec,
    pub converter_signal: ConverterSpec,
    pub converter_idler: ConverterSpec,
    pub detectors: [DetectorSpec; 2],
    pub tia: TiaSpec,
    pub repetition_rate_mhz: f64,
    pub n_start_pulses: u64,
    pub delays_ps: Vec<f64>,
    pub rng_seed: u64,
    /// Residual polarization/spatial mode overlap ξ.
    #[serde(default = "default_overlap")]
    pub distinguishability_overlap: f64,
    #[serde(default = "default_pulse_cap")]
    pub pulse_cap: u64,
}

impl ExperimentConfig {
    /// The experiment as published, with documented choices for the
    /// quantities it leaves open (repetition rate, detector efficiency,
    /// coincidence window, noise split).
    pub fn paper_default() -> Self {
        let source = SourceSpec::default();
        let mut converter_signal =
            ConverterSpec::matched(source.signal_center_thz, 226.477, 0.02, 40.0);
        converter_signal.noise_rate_cps = 1950.0;
        converter_signal.pump_power_mw = Some(4.9);
        let mut converter_idler =
            ConverterSpec::matched(source.idler_center_thz, 227.274, 0.02, 40.0);
        converter_idler.noise_rate_cps = 1950.0;
        converter_idler.pump_power_mw = Some(12.8);
        let detector = DetectorSpec {
            efficiency: 0.6,
            dark_rate_cps: 50.0,
        };
        Self {
            source,
            converter_signal,
            converter_idler,
            detectors: [detector; 2],
            tia: TiaSpec {
                coincidence_window_ns: 1.0,
                start_detector: 1,
            },
            repetition_rate_mhz: 100.0,
            n_start_pulses: 500_000,
            delays_ps: (-10..=10).map(|k| 4.0 * k as f64).collect(),
            rng_seed: 42,
            distinguishability_overlap: 1.0,
            pulse_cap: DEFAULT_PULSE_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.converter_signal.validate()?;
        self.converter_idler.validate()?;
        for (k, d) in self.detectors.iter().enumerate() {
            if !(0.0..=1.0).contains(&d.efficiency) {
                return Err(Error::domain(format!(
                    "detector {} efficiency must be in [0,1]",
                    k + 1
                )));
            }
            if !(d.dark_rate_cps >= 0.0) {
                return Err(Error::domain(format!(
                    "detector {} dark rate must be >= 0",
                    k + 1
                )));
            }
        }
        if !(self.repetition_rate_mhz > 0.0 && self.repetition_rate_mhz.is_finite()) {
            return Err(Error::domain("repetition_rate_mhz must be positive"));
        }
        if !(self.tia.coincidence_window_ns > 0.0) {
            return Err(Error::domain("coincidence_window_ns must be positive"));
        }
        let period_ns = 1e3 / self.repetition_rate_mhz;
        if self.tia.coincidence_window_ns >= period_ns {
            return Err(Error::domain(format!(
                "coincidence window {} ns spans the pulse period {period_ns} ns; cross-pulse coincidences are not modelled",
                self.tia.coincidence_window_ns
            )));
        }
        if !matches!(self.tia.start_detector, 1 | 2) {
            return Err(Error::domain("start_detector must be 1 or 2"));
        }
        if self.n_start_pulses == 0 {
            return Err(Error::domain("n_start_pulses must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.distinguishability_overlap) {
            return Err(Error::domain("distinguishability_overlap must be in [0,1]"));
        }
        validate_delays(&self.delays_ps)
    }

    /// SHA-256 of the canonical JSON form of the configuration.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipPoint {
    pub delay_ps: f64,
    pub coincidences: u64,
    pub starts: u64,
    #[serde(skip)]
    pub pulses: u64,
}

/// Raw coincidence counts versus delay.
#[derive(Clone, Debug, PartialEq)]
pub struct DipCurve {
    pub points: Vec<DipPoint>,
    pub config_digest: String,
    /// False when a point stopped at the pulse cap.
    pub complete: bool,
}

impl DipCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delay_ps,coincidences,starts\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{}", p.delay_ps, p.coincidences, p.starts);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::Csv {
                row: 1,
                message: e.to_string(),
            })?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["delay_ps", "coincidences", "starts"] {
            return Err(Error::Csv {
                row: 1,
                message: format!(
                    "expected header delay_ps,coincidences,starts, found {}",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        let mut points = Vec::new();
        for (k, rec) in reader.deserialize::<DipPoint>().enumerate() {
            let row = k + 2;
            let p = rec.map_err(|e| Error::Csv {
                row,
                message: e.to_string(),
            })?;
            if p.starts == 0 {
                return Err(Error::Csv {
                    row,
                    message: "starts must be > 0".into(),
                });
            }
            if !p.delay_ps.is_finite() {
                return Err(Error::Csv {
                    row,
                    message: "delay is not finite".into(),
                });
            }
            if let Some(prev) = points.last().map(|q: &DipPoint| q.delay_ps) {
                if p.delay_ps <= prev {
                    return Err(Error::Csv {
                        row,
                        message: "delays must be strictly increasing".into(),
                    });
                }
            }
            points.push(p);
        }
        if points.is_empty() {
            return Err(Error::Csv {
                row: 2,
                message: "no data rows".into(),
            });
        }
        Ok(Self {
            points,
            config_digest: String::new(),
            complete: true,
        })
    }

    pub fn delays(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.delay_ps).collect()
    }

    pub fn counts(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.coincidences as f64).collect()
    }
}

struct PointOutcome {
    point: DipPoint,
    complete: bool,
}

fn simulate_point(prep: &PreparedExperiment, index: usize, delay_ps: f64) -> PointOutcome {
    let config = prep.config();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(index as u64);
    let start = usize::from(config.tia.start_detector - 1);
    let mut sampler = pulse::ActiveSampler::new(prep);
    let (mut pulses, mut starts, mut coincidences) = (0u64, 0u64, 0u64);
    let mut complete = true;

    if !sampler.start_can_click(start) {
        complete = false;
    } else {
        while starts < config.n_start_pulses {
            let gap = sampler.next_gap(&mut rng);
            if gap > config.pulse_cap - pulses {
                pulses = config.pulse_cap;
                complete = false;
                break;
            }
            pulses += gap;
            let clicks = sampler.active_pulse(delay_ps, &mut rng);
            if clicks[start] {
                starts += 1;
            }
            if clicks[0] && clicks[1] {
                coincidences += 1;
            }
        }
    }
    PointOutcome {
        point: DipPoint {
            delay_ps,
            coincidences,
            starts,
            pulses,
        },
        complete,
    }
}

/// Runs every delay point until the start detector has counted
/// `n_start_pulses` clicks. Each delay point draws from its own random
/// stream, so results are independent of the thread count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<DipCurve> {
    run_experiment_with_threads(config, None)
}

pub fn run_experiment_with_threads(
    config: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<DipCurve> {
    let prep = PreparedExperiment::new(config)?;
    let run = || -> Vec<PointOutcome> {
        config
            .delays_ps
            .par_iter()
            .enumerate()
            .map(|(i, &d)| simulate_point(&prep, i, d))
            .collect()
    };
    let outcomes = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::domain(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let complete = outcomes.iter().all(|o| o.complete);
    let curve = DipCurve {
        points: outcomes.iter().map(|o| o.point).collect(),
        config_digest: config.digest(),
        complete,
    };
    if let Some(bad) = outcomes.iter().find(|o| !o.complete) {
        return Err(Error::PulseCap {
            cap: config.pulse_cap,
            delay_ps: bad.point.delay_ps,
            starts: bad.point.starts,
            partial: Box::new(curve),
        });
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_default_is_valid() {
        let c = ExperimentConfig::paper_default();
        c.validate().unwrap();
        assert_eq!(c.delays_ps.len(), 21);
        let noise = c.converter_signal.noise_rate_cps
            + c.converter_idler.noise_rate_cps
            + c.detectors.iter().map(|d| d.dark_rate_cps).sum::<f64>();
        assert_eq!(noise, 4000.0);
    }

    #[test]
    fn window_spanning_period_rejected() {
        let mut c = ExperimentConfig::paper_default();
        c.tia.coincidence_window_ns = 20.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let curve = DipCurve {
            points: vec![
                DipPoint {
                    delay_ps: -4.0,
                    coincidences: 10,
                    starts: 100,
                    pulses: 0,
                },
                DipPoint {
                    delay_ps: 0.5,
                    coincidences: 3,
                    starts: 100,
                    pulses: 0,
                },
            ],
            config_digest: String::new(),
            complete: true,
        };
        let back = DipCurve::from_csv(&curve.to_csv()).unwrap();
        assert_eq!(back.points, curve.points);

        let bad = "delay_ps,coincidences,starts\n0,1,2\n1,x,2\n";
        match DipCurve::from_csv(bad) {
            Err(Error::Csv { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
        assert!(DipCurve::from_csv("a,b\n1,2\n").is_err());
        assert!(DipCurve::from_csv("delay_ps,coincidences,starts\n1,1,0\n").is_err());
    }

    #[test]
    fn digest_changes_with_config() {
        let a = ExperimentConfig::paper_default();
        let mut b = a.clone();
        b.rng_seed = 7;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest(), a.clone().digest());
    }
}
