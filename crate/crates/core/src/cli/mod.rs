//! Command-line front end: scenario files in, CSV curves and fit reports
//! out.
//!
//! Exit codes: 0 success, 2 invalid input (scenario schema, malformed
//! CSV, bad arguments), 3 runtime failure (pulse cap, non-convergence).

pub mod scenario;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{
    bootstrap, coherence_consistency, fit_points, BootstrapSummary, CoherenceReport, FitResult,
};
use crate::hom::{hom_dip_curve, CurveGenerator, ProbabilityCurve};
use crate::montecarlo::{
    run_experiment_with_threads, visibility_budget, DipCurve, ExperimentConfig, VisibilityBudget,
};
use crate::sfg::convert_wavepacket;
use crate::source::{anticorrelated_jsa, emitted_wavepackets};
use crate::wavepacket::overlap_profile;

pub use scenario::{sweepable_paths, with_parameter, Generator, Mode, ScenarioFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "upconv",
    version,
    about = "Up-conversion two-photon interference simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunFlags {
    /// Override the scenario's RNG seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path prefix.
    #[arg(long)]
    pub out: Option<String>,
    /// Worker threads (affects speed only).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Maximum pulses simulated per delay point.
    #[arg(long)]
    pub pulse_cap: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario in the mode it declares.
    Run {
        /// Scenario file or builtin name.
        scenario: String,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Analytic coincidence-probability curve.
    Analytic {
        scenario: String,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Monte Carlo dip measurement.
    Simulate {
        scenario: String,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Fit the dip model to a curve CSV.
    Fit {
        curve: PathBuf,
        #[command(flatten)]
        options: FitOptions,
    },
    /// Analytic visibility decomposition.
    Budget {
        scenario: String,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Repeat simulate + fit + budget over values of one parameter.
    Sweep {
        scenario: String,
        /// Dotted parameter path, e.g. source.mean_pairs_per_pulse.
        #[arg(long)]
        parameter: Option<String>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Option<Vec<f64>>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Print a scenario (builtin or file) as normalized JSON.
    Show { scenario: String },
    /// List builtin scenarios.
    List,
}

#[derive(Args, Debug, Clone, Default)]
pub struct FitOptions {
    /// Output path prefix (default: the input path without extension).
    #[arg(long)]
    pub out: Option<String>,
    /// Photon bandwidth for the coherence-time consistency check.
    #[arg(long)]
    pub bandwidth_ghz: Option<f64>,
    /// Number of Poisson bootstrap replicas.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Seed for the bootstrap replicas.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Schema(_) | Error::Csv { .. } => EXIT_SCHEMA,
        _ => EXIT_RUNTIME,
    }
}

/// Parses `std::env::args` and runs the command.
pub fn main() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_SCHEMA } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run { scenario, flags } => {
            let s = ScenarioFile::load(&scenario)?;
            match s.mode {
                Mode::Analytic => cmd_analytic(&s, &flags).map(|r| print!("{}", r.to_text())),
                Mode::Simulate => cmd_simulate(&s, &flags).map(|_| ()),
                Mode::Budget => cmd_budget(&s, &flags).map(|b| print!("{}", budget_table(&b))),
                Mode::Sweep => cmd_sweep(&s, None, None, &flags).map(|_| ()),
                Mode::Fit => {
                    let path = s.fit_input_path().expect("validated");
                    let options = FitOptions {
                        out: flags.out.clone().or_else(|| s.output_prefix.clone()),
                        bandwidth_ghz: Some(s.experiment.source.channel_fwhm_ghz),
                        bootstrap: None,
                        seed: flags.seed.unwrap_or(s.experiment.rng_seed),
                    };
                    cmd_fit(&path, &options).map(|r| print!("{}", r.to_text()))
                }
            }
        }
        Command::Analytic { scenario, flags } => {
            let r = cmd_analytic(&ScenarioFile::load(&scenario)?, &flags)?;
            print!("{}", r.to_text());
            Ok(())
        }
        Command::Simulate { scenario, flags } => {
            cmd_simulate(&ScenarioFile::load(&scenario)?, &flags).map(|_| ())
        }
        Command::Fit { curve, options } => {
            let r = cmd_fit(&curve, &options)?;
            print!("{}", r.to_text());
            Ok(())
        }
        Command::Budget { scenario, flags } => {
            let b = cmd_budget(&ScenarioFile::load(&scenario)?, &flags)?;
            print!("{}", budget_table(&b));
            Ok(())
        }
        Command::Sweep {
            scenario,
            parameter,
            values,
            flags,
        } => cmd_sweep(&ScenarioFile::load(&scenario)?, parameter, values, &flags).map(|_| ()),
        Command::Show { scenario } => {
            let s = ScenarioFile::load(&scenario)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&s).expect("scenario serializes")
            );
            Ok(())
        }
        Command::List => {
            for (name, _) in scenario::BUILTIN {
                println!("{name}");
            }
            Ok(())
        }
    }
}

fn prefix(flags: &RunFlags, scenario: &ScenarioFile) -> String {
    flags
        .out
        .clone()
        .or_else(|| scenario.output_prefix.clone())
        .unwrap_or_else(|| "upconv".to_string())
}

fn write_output(prefix: &str, suffix: &str, contents: &str) -> Result<PathBuf> {
    let path = PathBuf::from(format!("{prefix}{suffix}"));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&path, contents)?;
    Ok(path)
}

/// The experiment after command-line overrides.
pub fn effective_config(scenario: &ScenarioFile, flags: &RunFlags) -> ExperimentConfig {
    let mut config = scenario.experiment.clone();
    if let Some(seed) = flags.seed {
        config.rng_seed = seed;
    }
    if let Some(cap) = flags.pulse_cap {
        config.pulse_cap = cap;
    }
    config
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyticReport {
    pub generator: Generator,
    pub n_points: usize,
    pub min_probability: f64,
    pub min_delay_ps: f64,
    pub max_probability: f64,
    /// Dip visibility and width implied by the inputs (closed form for the
    /// separable and model generators, a fit for the joint generator).
    pub implied_visibility: Option<f64>,
    pub implied_sigma_ps: Option<f64>,
    pub local_minima_ps: Vec<f64>,
    pub mean_minima_spacing_ps: Option<f64>,
    #[serde(skip)]
    pub curve: ProbabilityCurve,
}

impl AnalyticReport {
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6}"));
        let mut s = String::new();
        let _ = writeln!(s, "generator = {:?}", self.generator);
        let _ = writeln!(s, "n_points = {}", self.n_points);
        let _ = writeln!(
            s,
            "min_probability = {:.9} at {} ps",
            self.min_probability, self.min_delay_ps
        );
        let _ = writeln!(s, "max_probability = {:.9}", self.max_probability);
        let _ = writeln!(s, "implied_visibility = {}", opt(self.implied_visibility));
        let _ = writeln!(s, "implied_sigma_ps = {}", opt(self.implied_sigma_ps));
        let _ = writeln!(s, "local_minima = {}", self.local_minima_ps.len());
        let _ = writeln!(
            s,
            "mean_minima_spacing_ps = {}",
            opt(self.mean_minima_spacing_ps)
        );
        s
    }
}

/// Writes `<prefix>_analytic.csv` (`delay_ps,probability`) and a summary.
pub fn cmd_analytic(scenario: &ScenarioFile, flags: &RunFlags) -> Result<AnalyticReport> {
    let spec = scenario.analytic_spec();
    let config = effective_config(scenario, flags);
    let delays = scenario.analytic_delays()?;
    let (generator, implied) = match spec.generator {
        Generator::Separable => {
            let (mut s, mut i) = emitted_wavepackets(&config.source)?;
            if spec.converted {
                let cs = convert_wavepacket(&config.converter_signal, &s)?;
                let ci = convert_wavepacket(&config.converter_idler, &i)?;
                if cs.extinguished || ci.extinguished {
                    return Err(Error::domain("a converter extinguishes its input photon"));
                }
                (s, i) = (cs.wavepacket, ci.wavepacket);
            }
            let xi = config.distinguishability_overlap;
            let (peak, sigma) = overlap_profile(&s, &i);
            let generator = CurveGenerator::Separable {
                wp1: s,
                wp2: i,
                distinguishability_overlap: xi,
            };
            (generator, Some((xi * xi * peak, sigma)))
        }
        Generator::Joint => (
            CurveGenerator::Joint(anticorrelated_jsa(&config.source)?),
            None,
        ),
        Generator::Model => {
            let m = spec.model.expect("validated");
            (CurveGenerator::Model(m), Some((m.visibility, m.sigma_ps)))
        }
    };
    let curve = hom_dip_curve(&generator, &delays)?;
    let implied = implied.or_else(|| {
        let points: Vec<(f64, f64)> = curve
            .delays_ps
            .iter()
            .copied()
            .zip(curve.values.iter().copied())
            .collect();
        fit_points(&points)
            .ok()
            .filter(|f| f.converged)
            .map(|f| (f.visibility.value, f.sigma_ps.value))
    });
    let (imin, min) = curve
        .values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty curve");
    let minima = curve.local_minima();
    let spacing = (minima.len() >= 2)
        .then(|| (minima[minima.len() - 1] - minima[0]) / (minima.len() - 1) as f64);
    let report = AnalyticReport {
        generator: spec.generator,
        n_points: delays.len(),
        min_probability: min,
        min_delay_ps: curve.delays_ps[imin],
        max_probability: curve
            .values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max),
        implied_visibility: implied.map(|x| x.0),
        implied_sigma_ps: implied.map(|x| x.1),
        local_minima_ps: minima,
        mean_minima_spacing_ps: spacing,
        curve,
    };
    let p = prefix(flags, scenario);
    write_output(&p, "_analytic.csv", &report.curve.to_csv())?;
    write_output(&p, "_analytic_summary.txt", &report.to_text())?;
    write_output(&p, "_analytic_summary.json", &to_json(&report))?;
    Ok(report)
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

#[derive(Serialize)]
struct SimulationMeta<'a> {
    config_digest: &'a str,
    rng_seed: u64,
    complete: bool,
    pulses: Vec<u64>,
}

fn write_curve(prefix: &str, curve: &DipCurve, seed: u64) -> Result<PathBuf> {
    let meta = SimulationMeta {
        config_digest: &curve.config_digest,
        rng_seed: seed,
        complete: curve.complete,
        pulses: curve.points.iter().map(|p| p.pulses).collect(),
    };
    let (csv_suffix, meta_suffix) = if curve.complete {
        ("_dip.csv", "_dip.meta.json")
    } else {
        ("_dip.partial.csv", "_dip.partial.meta.json")
    };
    write_output(prefix, meta_suffix, &to_json(&meta))?;
    write_output(prefix, csv_suffix, &curve.to_csv())
}

/// Writes `<prefix>_dip.csv` and `<prefix>_dip.meta.json`. On pulse-cap
/// exhaustion the partial data go to `<prefix>_dip.partial.csv` and the
/// error is returned.
pub fn cmd_simulate(scenario: &ScenarioFile, flags: &RunFlags) -> Result<DipCurve> {
    let config = effective_config(scenario, flags);
    let p = prefix(flags, scenario);
    match run_experiment_with_threads(&config, flags.threads) {
        Ok(curve) => {
            let path = write_curve(&p, &curve, config.rng_seed)?;
            println!(
                "wrote {} ({} points, digest {})",
                path.display(),
                curve.points.len(),
                curve.config_digest
            );
            if let Ok(fit) = crate::fit::fit_dip(&curve) {
                println!(
                    "fit: V = {:.4} +/- {:.4}, sigma = {:.3} +/- {:.3} ps",
                    fit.visibility.value,
                    fit.visibility.std_error,
                    fit.sigma_ps.value,
                    fit.sigma_ps.std_error
                );
            }
            Ok(curve)
        }
        Err(Error::PulseCap {
            cap,
            delay_ps,
            starts,
            partial,
        }) => {
            let path = write_curve(&p, &partial, config.rng_seed)?;
            eprintln!("partial data written to {}", path.display());
            Err(Error::PulseCap {
                cap,
                delay_ps,
                starts,
                partial,
            })
        }
        Err(e) => Err(e),
    }
}

/// Reads either a simulated dip (`delay_ps,coincidences,starts`) or an
/// analytic curve (`delay_ps,probability`).
pub fn read_curve_points(text: &str) -> Result<Vec<(f64, f64)>> {
    let header = text.lines().next().unwrap_or("").trim();
    if header.replace(' ', "") == "delay_ps,probability" {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut points = Vec::new();
        for (k, rec) in reader.deserialize::<(f64, f64)>().enumerate() {
            let row = k + 2;
            let (d, p) = rec.map_err(|e| Error::Csv {
                row,
                message: e.to_string(),
            })?;
            if !d.is_finite() || !p.is_finite() {
                return Err(Error::Csv {
                    row,
                    message: "non-finite value".into(),
                });
            }
            if points.last().is_some_and(|&(prev, _)| d <= prev) {
                return Err(Error::Csv {
                    row,
                    message: "delays must be strictly increasing".into(),
                });
            }
            points.push((d, p));
        }
        if points.is_empty() {
            return Err(Error::Csv {
                row: 2,
                message: "no data rows".into(),
            });
        }
        return Ok(points);
    }
    let curve = DipCurve::from_csv(text)?;
    Ok(curve.delays().into_iter().zip(curve.counts()).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub fit: FitResult,
    pub bootstrap: Option<BootstrapSummary>,
    pub coherence: Option<CoherenceReport>,
}

impl FitReport {
    pub fn to_text(&self) -> String {
        let mut s = self.fit.to_text();
        if let Some(b) = &self.bootstrap {
            let _ = writeln!(s, "bootstrap_replicas = {}", b.replicas);
            let _ = writeln!(s, "bootstrap_visibility_std = {:.6}", b.visibility_std);
            let _ = writeln!(s, "bootstrap_sigma_std_ps = {:.6}", b.sigma_std_ps);
        }
        if let Some(c) = &self.coherence {
            let _ = writeln!(s, "coherence_sigma_theory_ps = {:.6}", c.sigma_theory_ps);
            let _ = writeln!(s, "coherence_z = {:.3}", c.z_score);
            let _ = writeln!(s, "coherence_consistent = {}", c.consistent);
        }
        s
    }
}

/// Fits a curve CSV and writes `<prefix>_fit.txt` and `<prefix>_fit.json`.
pub fn cmd_fit(curve_path: &Path, options: &FitOptions) -> Result<FitReport> {
    let text = std::fs::read_to_string(curve_path)
        .map_err(|e| Error::Schema(format!("cannot read {}: {e}", curve_path.display())))?;
    let points = read_curve_points(&text)?;
    let fit = fit_points(&points)?;
    if !fit.converged {
        return Err(Error::domain(format!(
            "fit did not converge after {} iterations",
            fit.n_iterations
        )));
    }
    let bootstrap = options
        .bootstrap
        .map(|n| bootstrap(&points, n, options.seed))
        .transpose()?;
    let coherence = options
        .bandwidth_ghz
        .map(|b| coherence_consistency(fit.sigma_ps, b))
        .transpose()?;
    let report = FitReport {
        fit,
        bootstrap,
        coherence,
    };
    let p = options
        .out
        .clone()
        .unwrap_or_else(|| curve_path.with_extension("").to_string_lossy().into_owned());
    write_output(&p, "_fit.txt", &report.to_text())?;
    write_output(&p, "_fit.json", &to_json(&report))?;
    Ok(report)
}

pub fn budget_table(b: &VisibilityBudget) -> String {
    let mut s = String::new();
    let per_start = |x: f64, r: &crate::montecarlo::ExpectedRates| x / r.start;
    let _ = writeln!(
        s,
        "{:<18} {:>16} {:>16}",
        "coincidences/start", "far delay", "zero delay"
    );
    let rows = [
        (
            "interfering_pair",
            b.baseline.coincidence.interfering_pair,
            b.floor.coincidence.interfering_pair,
        ),
        (
            "multi_pair",
            b.baseline.coincidence.multi_pair,
            b.floor.coincidence.multi_pair,
        ),
        (
            "raman",
            b.baseline.coincidence.raman,
            b.floor.coincidence.raman,
        ),
        (
            "dark_and_noise",
            b.baseline.coincidence.dark,
            b.floor.coincidence.dark,
        ),
        (
            "total",
            b.baseline.coincidence.total,
            b.floor.coincidence.total,
        ),
    ];
    for (name, far, zero) in rows {
        let _ = writeln!(
            s,
            "{name:<18} {:>16.6e} {:>16.6e}",
            per_start(far, &b.baseline),
            per_start(zero, &b.floor)
        );
    }
    let _ = writeln!(s, "visibility_predicted = {:.6}", b.visibility);
    let _ = writeln!(s, "floor_fraction = {:.6}", b.floor_fraction);
    match (b.visibility_fit, b.sigma_fit_ps) {
        (Some(v), Some(sig)) => {
            let _ = writeln!(s, "visibility_fit_to_prediction = {v:.6}");
            let _ = writeln!(s, "sigma_fit_to_prediction_ps = {sig:.6}");
        }
        _ => {
            let _ = writeln!(s, "visibility_fit_to_prediction = n/a");
        }
    }
    let _ = writeln!(s, "truncation_error = {:.3e}", b.truncation_error);
    if b.truncation_warning {
        let _ = writeln!(
            s,
            "warning: photon-number truncation error exceeds tolerance"
        );
    }
    s
}

/// Writes `<prefix>_budget.txt` and `<prefix>_budget.json`.
pub fn cmd_budget(scenario: &ScenarioFile, flags: &RunFlags) -> Result<VisibilityBudget> {
    let config = effective_config(scenario, flags);
    let b = visibility_budget(&config)?;
    let p = prefix(flags, scenario);
    write_output(&p, "_budget.txt", &budget_table(&b))?;
    write_output(&p, "_budget.json", &to_json(&b))?;
    Ok(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub visibility: f64,
    pub visibility_err: f64,
    pub sigma_ps: f64,
    pub sigma_err_ps: f64,
    pub budget_visibility: f64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s =
        String::from("value,visibility,visibility_err,sigma_ps,sigma_err_ps,budget_visibility\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.value,
            r.visibility,
            r.visibility_err,
            r.sigma_ps,
            r.sigma_err_ps,
            r.budget_visibility
        );
    }
    s
}

/// Runs simulate, fit and budget for each value and writes
/// `<prefix>_sweep.csv`. Arguments override the scenario's sweep section.
pub fn cmd_sweep(
    scenario: &ScenarioFile,
    parameter: Option<String>,
    values: Option<Vec<f64>>,
    flags: &RunFlags,
) -> Result<Vec<SweepRow>> {
    let section = scenario.sweep.as_ref();
    let parameter = parameter
        .or_else(|| section.map(|s| s.parameter.clone()))
        .ok_or_else(|| Error::Schema("no sweep parameter given".into()))?;
    let values = values
        .or_else(|| section.map(|s| s.values.clone()))
        .unwrap_or_default();
    if values.is_empty() {
        return Err(Error::Schema("sweep value list is empty".into()));
    }
    let base = effective_config(scenario, flags);
    let configs = values
        .iter()
        .map(|&v| with_parameter(&base, &parameter, v))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(values.len());
    for (&value, config) in values.iter().zip(&configs) {
        let curve = run_experiment_with_threads(config, flags.threads)?;
        let fit = crate::fit::fit_dip(&curve)?;
        let budget = visibility_budget(config)?;
        let row = SweepRow {
            value,
            visibility: fit.visibility.value,
            visibility_err: fit.visibility.std_error,
            sigma_ps: fit.sigma_ps.value,
            sigma_err_ps: fit.sigma_ps.std_error,
            budget_visibility: budget.visibility,
        };
        println!(
            "{parameter} = {value}: V = {:.4} +/- {:.4}, sigma = {:.3} ps, budget V = {:.4}",
            row.visibility, row.visibility_err, row.sigma_ps, row.budget_visibility
        );
        rows.push(row);
    }
    write_output(&prefix(flags, scenario), "_sweep.csv", &sweep_csv(&rows))?;
    Ok(rows)
}
