//! Simulates and fits the dip for several detector dark rates, next to the
//! analytic prediction.
//!
//! `cargo run --release --example parameter_sweep`

use upconv::cli::with_parameter;
use upconv::{fit_dip, run_experiment, visibility_budget, ExperimentConfig};

fn main() -> Result<(), upconv::Error> {
    let base = ExperimentConfig::paper_default();
    println!("{:>10} {:>14} {:>10}", "dark_cps", "V_fit", "V_pred");
    for dark in [0.0, 50.0, 500.0, 2000.0] {
        let mut config = with_parameter(&base, "detectors.0.dark_rate_cps", dark)?;
        config = with_parameter(&config, "detectors.1.dark_rate_cps", dark)?;
        config.n_start_pulses = 200_000;
        let fit = fit_dip(&run_experiment(&config)?)?;
        let budget = visibility_budget(&config)?;
        println!(
            "{dark:10.0} {:>8.4}+/-{:.4} {:10.4}",
            fit.visibility.value, fit.visibility.std_error, budget.visibility
        );
    }
    Ok(())
}
