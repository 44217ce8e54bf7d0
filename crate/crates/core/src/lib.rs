//! Photon detection modeled as a cascade of phase transitions.
//!
//! The crate follows a single photon (or an entangled photon pair) from a
//! Gaussian momentum-space wavepacket, through Born-rule outcome sampling in
//! superfluid microdetectors, into a macroscopic superposition of detector
//! states, and finally through a spin-boson collapse that is only allowed to
//! start once the detectors come into light-cone contact.
//!
//! Natural units `ħ = c = k_B = 1` are used internally everywhere; [`units`]
//! handles conversion for display.
//!
//! Modules:
//! - [`wavepacket`]: Gaussian photon states on a discrete momentum grid.
//! - [`detection`]: single-detector outcome probabilities, sampling and
//!   post-absorption heating of an ideal Bose gas.
//! - [`entangle`]: two-photon states, cat-state branch bookkeeping and
//!   EPR correlation statistics.
//! - [`spinboson`]: truncated Fock-space spin-boson engine with Krylov
//!   propagation.
//! - [`causal`]: spacetime intervals, contact schedules and the end-to-end
//!   EPR scenario pipeline.
//! - [`harness`]: configuration, ensembles and the `catcollapse` CLI.

pub mod causal;
pub mod detection;
pub mod entangle;
pub mod harness;
pub mod rng;
pub mod spinboson;
pub mod units;
pub mod wavepacket;

pub use num_complex::Complex64;

/// Plain 3-vector used for positions and wavevectors.
pub type Vec3 = [f64; 3];

pub(crate) fn norm3(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn sub3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
