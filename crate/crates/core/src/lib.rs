//! Simulation and analysis of two-photon interference after quantum
//! frequency up-conversion.
//!
//! Two telecom photons from a four-wave-mixing pair source sit 797 GHz
//! apart and cannot interfere at a beamsplitter. Each one is shifted by a
//! sum-frequency-generation converter to a common 420.153 THz output, after
//! which the pair shows a Hong-Ou-Mandel dip again. The crate models every
//! stage of that chain:
//!
//! - [`wavepacket`]: Gaussian spectral amplitudes, overlaps and coherence time.
//! - [`sfg`]: the two-mode SFG rotation, conversion efficiency and spectral
//!   translation.
//! - [`source`]: pair-number statistics, Raman noise and the joint spectrum.
//! - [`hom`]: analytic coincidence probabilities and the Gaussian dip model.
//! - [`montecarlo`]: end-to-end coincidence counting and the analytic
//!   visibility budget.
//! - [`fit`]: weighted least-squares estimation of the dip parameters.
//! - [`cli`]: scenario files and the `upconv` command-line driver.
//!
//! Frequencies are in THz (bandwidths in GHz) and times in ps throughout,
//! so a frequency-time product is a plain number of cycles.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fit;
pub mod hom;
pub mod montecarlo;
pub mod quadrature;
pub mod sfg;
pub mod source;
pub mod units;
pub mod wavepacket;

pub use error::{Error, Result};
pub use fit::{fit_dip, fit_points, FitResult};
pub use hom::DipModel;
pub use montecarlo::{run_experiment, visibility_budget, DipCurve, ExperimentConfig};
pub use sfg::ConverterSpec;
pub use source::SourceSpec;
pub use wavepacket::SpectralWavepacket;
