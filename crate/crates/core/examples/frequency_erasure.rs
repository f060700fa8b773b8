//! Two photons 797 GHz apart do not interfere; after each is up-converted
//! with its own pump to the same sum frequency, they do.
//!
//! `cargo run --example frequency_erasure`

use upconv::hom::coincidence_probability_separable;
use upconv::montecarlo::ExperimentConfig;
use upconv::sfg::convert_wavepacket;
use upconv::source::emitted_wavepackets;
use upconv::wavepacket::overlap_profile;

fn main() -> Result<(), upconv::Error> {
    let config = ExperimentConfig::paper_default();
    let (signal, idler) = emitted_wavepackets(&config.source)?;
    let cs = convert_wavepacket(&config.converter_signal, &signal)?;
    let ci = convert_wavepacket(&config.converter_idler, &idler)?;

    println!(
        "signal {:.3} THz -> {:.3} THz, survival {:.5}, bandwidth {:.2} -> {:.2} GHz",
        signal.center_thz(),
        cs.wavepacket.center_thz(),
        cs.survival_probability,
        signal.fwhm_ghz(),
        cs.wavepacket.fwhm_ghz()
    );
    println!(
        "idler  {:.3} THz -> {:.3} THz, survival {:.5}",
        idler.center_thz(),
        ci.wavepacket.center_thz(),
        ci.survival_probability
    );

    println!("{:>9} {:>14} {:>14}", "delay_ps", "P_c before", "P_c after");
    for delay in [-30.0, -15.0, -5.0, 0.0, 5.0, 15.0, 30.0] {
        let before = coincidence_probability_separable(&signal, &idler, delay, 1.0)?;
        let after = coincidence_probability_separable(&cs.wavepacket, &ci.wavepacket, delay, 1.0)?;
        println!("{delay:9.1} {before:14.9} {after:14.9}");
    }
    let (peak, sigma) = overlap_profile(&cs.wavepacket, &ci.wavepacket);
    println!("after conversion: overlap peak {peak:.6}, dip sigma {sigma:.3} ps");
    Ok(())
}
