//! Breaks the expected dip visibility down by cause (multi-pair emission,
//! Raman photons, dark and converter-noise clicks) for a range of pair
//! rates.
//!
//! `cargo run --release --example visibility_budget`

use upconv::cli::budget_table;
use upconv::montecarlo::{visibility_budget, ExperimentConfig};

fn main() -> Result<(), upconv::Error> {
    let mut config = ExperimentConfig::paper_default();
    print!("{}", budget_table(&visibility_budget(&config)?));

    println!();
    println!("{:>8} {:>10} {:>12}", "mu", "V_pred", "V_fit_pred");
    for mu in [0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2] {
        config.source.mean_pairs_per_pulse = mu;
        let b = visibility_budget(&config)?;
        println!(
            "{mu:8.3} {:10.4} {:12.4}",
            b.visibility,
            b.visibility_fit.unwrap_or(f64::NAN)
        );
    }

    config = ExperimentConfig::paper_default();
    println!();
    println!("{:>12} {:>10}", "jitter_ps", "V_pred");
    for jitter in [0.0, 5.0, 10.0, 20.0] {
        config.source.timing_jitter_sigma_ps = jitter;
        println!(
            "{jitter:12.1} {:10.4}",
            visibility_budget(&config)?.visibility
        );
    }
    Ok(())
}
