//! Command-line behaviour: outputs, round trips, exit codes, determinism.

use std::fs;
use std::path::Path;

use upconv::cli::{
    cmd_fit, read_curve_points, run_from, scenario::BUILTIN, sweepable_paths, with_parameter,
    FitOptions, ScenarioFile, EXIT_OK, EXIT_RUNTIME, EXIT_SCHEMA,
};
use upconv::{Error, ExperimentConfig};

fn run(args: &[&str]) -> i32 {
    run_from(std::iter::once("upconv").chain(args.iter().copied()))
}

fn prefix(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

/// A fast variant of the bundled experiment written to `dir`.
fn small_scenario(dir: &Path, starts: u64) -> String {
    let mut s = ScenarioFile::builtin("paper_default").unwrap();
    s.experiment.n_start_pulses = starts;
    let path = dir.join("small.json");
    fs::write(&path, serde_json::to_string_pretty(&s).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn bundled_default_matches_library_default() {
    let s = ScenarioFile::builtin("paper_default").unwrap();
    assert_eq!(s.experiment, ExperimentConfig::paper_default());
}

#[test]
fn all_builtins_parse() {
    for (name, _) in BUILTIN {
        assert!(ScenarioFile::builtin(name).is_some(), "{name}");
    }
}

#[test]
fn unknown_keys_rejected_with_location() {
    let text = ScenarioFile::builtin("paper_default")
        .map(|s| serde_json::to_string_pretty(&s).unwrap())
        .unwrap();
    let bad = text.replacen("\"mode\"", "\"colour\": 1,\n  \"mode\"", 1);
    match ScenarioFile::from_json(&bad) {
        Err(Error::Schema(msg)) => assert!(msg.contains("line") && msg.contains("colour"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn schema_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\"mode\": \"simulate\"}").unwrap();
    assert_eq!(run(&["simulate", path.to_str().unwrap()]), EXIT_SCHEMA);
    assert_eq!(run(&["simulate", "no_such_file.json"]), EXIT_SCHEMA);
    assert_eq!(run(&["frobnicate"]), EXIT_SCHEMA);
}

#[test]
fn analytic_default_curve_has_zero_floor() {
    let dir = tempfile::tempdir().unwrap();
    let p = prefix(dir.path(), "a");
    assert_eq!(run(&["analytic", "paper_default", "--out", &p]), EXIT_OK);
    let points =
        read_curve_points(&fs::read_to_string(format!("{p}_analytic.csv")).unwrap()).unwrap();
    let at_zero = points.iter().find(|(d, _)| *d == 0.0).unwrap().1;
    assert!(at_zero.abs() < 1e-12);
    assert!(fs::read_to_string(format!("{p}_analytic_summary.json"))
        .unwrap()
        .contains("implied_sigma_ps"));
}

#[test]
fn beating_scenario_minima_spacing() {
    let dir = tempfile::tempdir().unwrap();
    let p = prefix(dir.path(), "b");
    assert_eq!(run(&["run", "beating", "--out", &p]), EXIT_OK);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(format!("{p}_analytic_summary.json")).unwrap())
            .unwrap();
    let spacing = summary["mean_minima_spacing_ps"].as_f64().unwrap();
    assert!((spacing / 1.2547 - 1.0).abs() < 0.01, "{spacing}");
}

#[test]
fn analytic_curve_round_trips_through_fit() {
    let dir = tempfile::tempdir().unwrap();
    let p = prefix(dir.path(), "e");
    assert_eq!(run(&["run", "erasure_25ghz", "--out", &p]), EXIT_OK);
    let report = cmd_fit(
        Path::new(&format!("{p}_analytic.csv")),
        &FitOptions {
            bandwidth_ghz: Some(25.0),
            ..FitOptions::default()
        },
    )
    .unwrap();
    assert!((report.fit.sigma_ps.value - 10.60).abs() < 0.01);
    assert!(report.coherence.unwrap().consistent);
}

#[test]
fn simulate_then_fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario(dir.path(), 50_000);
    let p = prefix(dir.path(), "s");
    assert_eq!(run(&["simulate", &scenario, "--out", &p]), EXIT_OK);
    let csv = format!("{p}_dip.csv");
    assert_eq!(
        run(&["fit", &csv, "--out", &p, "--bootstrap", "50"]),
        EXIT_OK
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(format!("{p}_fit.json")).unwrap()).unwrap();
    let v = report["fit"]["visibility"]["value"].as_f64().unwrap();
    assert!((0.5..0.95).contains(&v), "{v}");
    assert!(report["bootstrap"]["visibility_std"].as_f64().unwrap() > 0.0);
    let meta = fs::read_to_string(format!("{p}_dip.meta.json")).unwrap();
    assert!(meta.contains("config_digest"));
}

#[test]
fn output_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario(dir.path(), 20_000);
    let (p1, p4) = (prefix(dir.path(), "t1"), prefix(dir.path(), "t4"));
    assert_eq!(
        run(&["simulate", &scenario, "--out", &p1, "--threads", "1"]),
        EXIT_OK
    );
    assert_eq!(
        run(&["simulate", &scenario, "--out", &p4, "--threads", "4"]),
        EXIT_OK
    );
    for suffix in ["_dip.csv", "_dip.meta.json"] {
        let a = fs::read(format!("{p1}{suffix}")).unwrap();
        let b = fs::read(format!("{p4}{suffix}")).unwrap();
        assert_eq!(a, b, "{suffix}");
    }
}

#[test]
fn seed_flag_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario(dir.path(), 20_000);
    let (a, b) = (prefix(dir.path(), "x"), prefix(dir.path(), "y"));
    assert_eq!(
        run(&["simulate", &scenario, "--out", &a, "--seed", "1"]),
        EXIT_OK
    );
    assert_eq!(
        run(&["simulate", &scenario, "--out", &b, "--seed", "2"]),
        EXIT_OK
    );
    assert_ne!(
        fs::read(format!("{a}_dip.csv")).unwrap(),
        fs::read(format!("{b}_dip.csv")).unwrap()
    );
}

#[test]
fn pulse_cap_exits_three_with_partial_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = prefix(dir.path(), "cap");
    assert_eq!(
        run(&[
            "simulate",
            "paper_default",
            "--out",
            &p,
            "--pulse-cap",
            "10000"
        ]),
        EXIT_RUNTIME
    );
    assert!(Path::new(&format!("{p}_dip.partial.csv")).exists());
    let meta = fs::read_to_string(format!("{p}_dip.partial.meta.json")).unwrap();
    assert!(meta.contains("\"complete\": false"));
    assert!(!Path::new(&format!("{p}_dip.csv")).exists());
}

#[test]
fn malformed_curve_reports_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(
        &path,
        "delay_ps,coincidences,starts\n-8,100,1000\n-4,90,1000\n0,x,1000\n",
    )
    .unwrap();
    match cmd_fit(&path, &FitOptions::default()) {
        Err(Error::Csv { row, .. }) => assert_eq!(row, 4),
        other => panic!("{other:?}"),
    }
    assert_eq!(run(&["fit", path.to_str().unwrap()]), EXIT_SCHEMA);
    fs::write(&path, "delay_ps,probability\n0,0.1\n1,oops\n").unwrap();
    assert!(matches!(
        cmd_fit(&path, &FitOptions::default()),
        Err(Error::Csv { row: 3, .. })
    ));
}

#[test]
fn budget_command_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let p = prefix(dir.path(), "bud");
    assert_eq!(run(&["budget", "paper_default", "--out", &p]), EXIT_OK);
    let table = fs::read_to_string(format!("{p}_budget.txt")).unwrap();
    assert!(table.contains("visibility_predicted"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(format!("{p}_budget.json")).unwrap()).unwrap();
    let v = json["visibility"].as_f64().unwrap();
    assert!((0.6..0.85).contains(&v));
}

#[test]
fn sweep_argument_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = prefix(dir.path(), "sw");
    assert_eq!(
        run(&[
            "sweep",
            "paper_default",
            "--parameter",
            "source.bogus",
            "--values",
            "1",
            "--out",
            &p
        ]),
        EXIT_SCHEMA
    );
    assert_eq!(run(&["sweep", "paper_default", "--out", &p]), EXIT_SCHEMA);
    let path = dir.path().join("empty.json");
    let mut s = ScenarioFile::builtin("mu_sweep").unwrap();
    s.sweep.as_mut().unwrap().values.clear();
    fs::write(&path, serde_json::to_string(&s).unwrap()).unwrap();
    assert_eq!(
        run(&["run", path.to_str().unwrap(), "--out", &p]),
        EXIT_SCHEMA
    );
}

#[test]
fn sweep_rows_follow_input_order() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario(dir.path(), 50_000);
    let p = prefix(dir.path(), "mu");
    let code = run(&[
        "sweep",
        &scenario,
        "--parameter",
        "source.mean_pairs_per_pulse",
        "--values",
        "0.2,0.01",
        "--out",
        &p,
    ]);
    assert_eq!(code, EXIT_OK);
    let text = fs::read_to_string(format!("{p}_sweep.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], 0.2);
    assert!(rows[0][1] < rows[1][1]);
}

#[test]
fn sweep_paths_cover_nested_and_optional_fields() {
    let config = ExperimentConfig::paper_default();
    let paths = sweepable_paths(&config);
    for p in [
        "source.mean_pairs_per_pulse",
        "detectors.1.dark_rate_cps",
        "source.raman_mean_signal",
        "n_start_pulses",
    ] {
        assert!(paths.iter().any(|q| q == p), "{p}");
    }
    assert!(!paths.iter().any(|q| q.starts_with("delays_ps")));
    let c = with_parameter(&config, "detectors.1.dark_rate_cps", 10.0).unwrap();
    assert_eq!(c.detectors[1].dark_rate_cps, 10.0);
    let c = with_parameter(&config, "source.raman_mean_signal", 0.0).unwrap();
    assert_eq!(c.source.raman_mean_signal, Some(0.0));
    let c = with_parameter(&config, "n_start_pulses", 1000.0).unwrap();
    assert_eq!(c.n_start_pulses, 1000);
    assert!(matches!(
        with_parameter(&config, "n_start_pulses", 0.5),
        Err(Error::Schema(_))
    ));
}

#[test]
fn noise_free_scenario_reaches_unit_visibility() {
    let dir = tempfile::tempdir().unwrap();
    let p = prefix(dir.path(), "nf");
    assert_eq!(run(&["run", "noise_free", "--out", &p]), EXIT_OK);
    let report = cmd_fit(Path::new(&format!("{p}_dip.csv")), &FitOptions::default()).unwrap();
    assert!(
        report.fit.visibility.value >= 0.98,
        "{:?}",
        report.fit.visibility
    );
}

#[test]
fn published_schema_lists_every_config_field() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/scenario.schema.json");
    let schema: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let defs = &schema["$defs"];
    let mut config = serde_json::to_value(ExperimentConfig::paper_default()).unwrap();
    config["source"]["raman_mean_signal"] = 0.0.into();
    config["source"]["raman_mean_idler"] = 0.0.into();
    let sections = [
        ("experiment", &config),
        ("source", &config["source"]),
        ("converter", &config["converter_signal"]),
        ("detector", &config["detectors"][0]),
    ];
    for (def, value) in sections {
        let props = defs[def]["properties"].as_object().unwrap();
        for key in value.as_object().unwrap().keys() {
            assert!(props.contains_key(key), "{def}.{key} missing from schema");
        }
    }
    let scenario = serde_json::to_value(ScenarioFile::builtin("beating").unwrap()).unwrap();
    for key in scenario.as_object().unwrap().keys() {
        assert!(
            schema["properties"].as_object().unwrap().contains_key(key),
            "{key}"
        );
    }
}
