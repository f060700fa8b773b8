//! Scenario files: an experiment configuration plus what to do with it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hom::{validate_delays, DipModel};
use crate::montecarlo::ExperimentConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Analytic,
    Simulate,
    Fit,
    Budget,
    Sweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Independent single-photon wavepackets, optionally passed through
    /// the converters first.
    Separable,
    /// Frequency-anticorrelated pair spectrum (no conversion).
    Joint,
    /// The Gaussian dip model itself.
    Model,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayGrid {
    pub start_ps: f64,
    pub stop_ps: f64,
    pub step_ps: f64,
}

impl DelayGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step_ps > 0.0) || !(self.stop_ps >= self.start_ps) {
            return Err(Error::Schema(
                "delay_grid needs step_ps > 0 and stop_ps >= start_ps".into(),
            ));
        }
        let n = ((self.stop_ps - self.start_ps) / self.step_ps + 1e-9).floor() as usize;
        if n > 1_000_000 {
            return Err(Error::Schema(
                "delay_grid has more than a million points".into(),
            ));
        }
        Ok((0..=n)
            .map(|k| self.start_ps + k as f64 * self.step_ps)
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticSpec {
    pub generator: Generator,
    /// Pass separable photons through the converters before the coupler.
    #[serde(default = "default_true")]
    pub converted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_grid: Option<DelayGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<DipModel>,
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Dotted path into the experiment, e.g. `source.mean_pairs_per_pulse`.
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_prefix: Option<String>,
    pub experiment: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic: Option<AnalyticSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    /// Curve CSV consumed by `fit` mode, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_input: Option<String>,
    /// Directory of the file the scenario was read from.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

/// Scenarios shipped with the crate, addressable by name.
pub const BUILTIN: &[(&str, &str)] = &[
    (
        "paper_default",
        include_str!("../../scenarios/paper_default.json"),
    ),
    ("beating", include_str!("../../scenarios/beating.json")),
    (
        "erasure_25ghz",
        include_str!("../../scenarios/erasure_25ghz.json"),
    ),
    (
        "noise_free",
        include_str!("../../scenarios/noise_free.json"),
    ),
    ("mu_sweep", include_str!("../../scenarios/mu_sweep.json")),
    (
        "jitter_sweep",
        include_str!("../../scenarios/jitter_sweep.json"),
    ),
];

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Self = serde_json::from_str(text)
            .map_err(|e| Error::Schema(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn builtin(name: &str) -> Option<Self> {
        BUILTIN
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::from_json(text).expect("bundled scenario is valid"))
    }

    /// Loads a builtin by name, otherwise reads the file at `spec`.
    pub fn load(spec: &str) -> Result<Self> {
        if let Some(s) = Self::builtin(spec) {
            return Ok(s);
        }
        let path = Path::new(spec);
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Schema(format!("cannot read scenario {spec}: {e}")))?;
        let mut scenario = Self::from_json(&text)?;
        scenario.base_dir = path.parent().map(Path::to_path_buf);
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        let schema = |e: Error| match e {
            Error::Domain(m) => Error::Schema(format!("experiment: {m}")),
            other => other,
        };
        self.experiment.validate().map_err(schema)?;
        if let Some(a) = &self.analytic {
            if let Some(g) = &a.delay_grid {
                validate_delays(&g.points()?).map_err(schema)?;
            }
            match (a.generator, &a.model) {
                (Generator::Model, None) => {
                    return Err(Error::Schema(
                        "analytic.model is required for the model generator".into(),
                    ))
                }
                (Generator::Model, Some(m)) => m.validate().map_err(schema)?,
                _ => {}
            }
        }
        match self.mode {
            Mode::Sweep if self.sweep.is_none() => Err(Error::Schema(
                "mode sweep requires a `sweep` section".into(),
            )),
            Mode::Fit if self.fit_input.is_none() => {
                Err(Error::Schema("mode fit requires `fit_input`".into()))
            }
            _ => Ok(()),
        }
    }

    /// The analytic section, defaulting to converted separable photons.
    pub fn analytic_spec(&self) -> AnalyticSpec {
        self.analytic.clone().unwrap_or(AnalyticSpec {
            generator: Generator::Separable,
            converted: true,
            delay_grid: None,
            model: None,
        })
    }

    pub fn fit_input_path(&self) -> Option<PathBuf> {
        let input = Path::new(self.fit_input.as_ref()?);
        Some(match &self.base_dir {
            Some(dir) if input.is_relative() => dir.join(input),
            _ => input.to_path_buf(),
        })
    }

    pub fn analytic_delays(&self) -> Result<Vec<f64>> {
        match self.analytic.as_ref().and_then(|a| a.delay_grid) {
            Some(g) => g.points(),
            None => Ok(self.experiment.delays_ps.clone()),
        }
    }
}

/// Optional numeric fields that are absent from a serialized configuration
/// when unset but can still be swept.
const OPTIONAL_NUMERIC: &[&str] = &[
    "source.raman_mean_signal",
    "source.raman_mean_idler",
    "converter_signal.response_fwhm_ghz",
    "converter_signal.pump_power_mw",
    "converter_idler.response_fwhm_ghz",
    "converter_idler.pump_power_mw",
];

fn numeric_leaves(value: &serde_json::Value, prefix: &str, out: &mut Vec<String>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        serde_json::Value::Number(_) => out.push(prefix.to_string()),
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                numeric_leaves(v, &join(k), out);
            }
        }
        serde_json::Value::Array(items) if prefix != "delays_ps" => {
            for (i, v) in items.iter().enumerate() {
                numeric_leaves(v, &join(&i.to_string()), out);
            }
        }
        _ => {}
    }
}

/// Every dotted path a sweep may set.
pub fn sweepable_paths(config: &ExperimentConfig) -> Vec<String> {
    let value = serde_json::to_value(config).expect("config serializes");
    let mut out = Vec::new();
    numeric_leaves(&value, "", &mut out);
    for p in OPTIONAL_NUMERIC {
        if !out.iter().any(|q| q == p) {
            out.push((*p).to_string());
        }
    }
    out.sort();
    out
}

/// Returns a copy of `config` with the field at `path` set to `value`.
pub fn with_parameter(
    config: &ExperimentConfig,
    path: &str,
    value: f64,
) -> Result<ExperimentConfig> {
    let paths = sweepable_paths(config);
    if !paths.iter().any(|p| p == path) {
        return Err(Error::Schema(format!(
            "unknown sweep parameter `{path}`; valid paths:\n  {}",
            paths.join("\n  ")
        )));
    }
    let mut root = serde_json::to_value(config).expect("config serializes");
    let mut parts: Vec<&str> = path.split('.').collect();
    let leaf = parts.pop().expect("non-empty path");
    let mut node = &mut root;
    for part in parts {
        node = match node {
            serde_json::Value::Array(items) => {
                &mut items[part.parse::<usize>().expect("index path")]
            }
            other => &mut other[part],
        };
    }
    let number = if value.fract() == 0.0 && value.abs() < 9.0e15 {
        serde_json::Value::from(value as i64)
    } else {
        serde_json::Value::from(value)
    };
    match node {
        serde_json::Value::Array(items) => {
            items[leaf.parse::<usize>().expect("index path")] = number
        }
        serde_json::Value::Object(map) => {
            map.insert(leaf.to_string(), number);
        }
        _ => unreachable!("path parents are objects or arrays"),
    }
    let updated: ExperimentConfig = serde_json::from_value(root)
        .map_err(|e| Error::Schema(format!("{path} = {value}: {e}")))?;
    updated
        .validate()
        .map_err(|e| Error::Schema(format!("{path} = {value}: {e}")))?;
    Ok(updated)
}
