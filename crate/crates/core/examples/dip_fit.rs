//! Fits the Gaussian dip model to a Poisson-noisy synthetic curve and
//! compares curvature, bootstrap and coherence-time diagnostics.
//!
//! `cargo run --example dip_fit [seed]`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use upconv::fit::{bootstrap, coherence_consistency, fit_points};
use upconv::hom::DipModel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(1);
    let truth = DipModel::new(300.0, 0.732, 9.5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<(f64, f64)> = (-10..=10)
        .map(|k| {
            let x = 4.0 * k as f64;
            (x, Poisson::new(truth.eval(x)).unwrap().sample(&mut rng))
        })
        .collect();

    let fit = fit_points(&points)?;
    print!("{}", fit.to_text());

    let boot = bootstrap(&points, 200, seed)?;
    println!(
        "bootstrap ({} replicas): V std {:.4}, sigma std {:.3} ps",
        boot.replicas, boot.visibility_std, boot.sigma_std_ps
    );
    let coherence = coherence_consistency(fit.sigma_ps, 25.0)?;
    println!(
        "25 GHz transform limit {:.2} ps, z = {:.2}, consistent: {}",
        coherence.sigma_theory_ps, coherence.z_score, coherence.consistent
    );
    Ok(())
}
