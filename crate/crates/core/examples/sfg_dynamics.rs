//! Mode-pair rotation inside the nonlinear crystal: closed form versus a
//! direct integration of the coupled equations, and conversion of a mean
//! photon number as the pump angle grows.
//!
//! `cargo run --example sfg_dynamics`

use std::f64::consts::PI;

use upconv::sfg::{evolve_modes, integrate_heisenberg, mean_sfg_photons, ModePairState};

fn main() -> Result<(), upconv::Error> {
    let input = ModePairState::real(0.0, 1.0);
    println!(
        "{:>8} {:>12} {:>12} {:>12} {:>10}",
        "theta", "|a_L|^2", "|a_S|^2", "ode error", "<n_SFG>"
    );
    for k in 0..=8 {
        let theta = PI * k as f64 / 8.0;
        let closed = evolve_modes(input, theta);
        let error = if theta > 0.0 {
            let ode = integrate_heisenberg(input, 1.0, theta, theta / 4000.0)?;
            (ode.amplitude_l - closed.amplitude_l).norm()
        } else {
            0.0
        };
        println!(
            "{theta:8.4} {:12.6} {:12.6} {error:12.2e} {:10.6}",
            closed.amplitude_l.norm_sqr(),
            closed.amplitude_s.norm_sqr(),
            mean_sfg_photons(1.0, 0.0, theta)
        );
    }
    println!(
        "vacuum input at theta = pi/2 gives {} SFG photons",
        mean_sfg_photons(0.0, 0.0, PI / 2.0)
    );
    Ok(())
}
