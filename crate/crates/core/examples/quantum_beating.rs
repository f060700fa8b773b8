//! Interference of the frequency-anticorrelated pair itself, without
//! conversion: the two-colour spectrum produces fringes whose period is the
//! inverse of the signal-idler detuning.
//!
//! `cargo run --release --example quantum_beating > beating.csv`

use upconv::hom::{hom_dip_curve, CurveGenerator};
use upconv::source::{anticorrelated_jsa, SourceSpec};

fn main() -> Result<(), upconv::Error> {
    let source = SourceSpec::default();
    let jsa = anticorrelated_jsa(&source)?;
    let delays: Vec<f64> = (-300..=300).map(|k| 0.02 * k as f64).collect();
    let curve = hom_dip_curve(&CurveGenerator::Joint(jsa), &delays)?;
    print!("{}", curve.to_csv());

    let minima = curve.local_minima();
    let detuning_thz = source.signal_center_thz - source.idler_center_thz;
    eprintln!(
        "minima (ps): {:?}",
        minima
            .iter()
            .map(|m| (m * 1e4).round() / 1e4)
            .collect::<Vec<_>>()
    );
    if minima.len() >= 2 {
        let spacing = (minima[minima.len() - 1] - minima[0]) / (minima.len() - 1) as f64;
        eprintln!(
            "mean spacing {spacing:.4} ps, 1/detuning {:.4} ps",
            1.0 / detuning_thz
        );
    }
    Ok(())
}
