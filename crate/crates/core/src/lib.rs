//! Post-selected phase squeezing of large-amplitude coherent pulses.
//!
//! A coherent probe `|alpha>` couples through a weak cross-Kerr phase `phi0` to one arm of a
//! single-photon Mach-Zehnder interferometer. Detecting the photon behind a variable beam
//! splitter leaves the probe in a superposition of `|alpha e^{i phi0}>` and `|alpha>` that, for
//! suitable transmissivity, is close to a phase-squeezed coherent state.
//!
//! * [`amplitude`]: closed-form overlaps and wavefunctions, safe at `|alpha|^2 ~ 10^6`.
//! * [`interferometer`]: the post-selected state, success probability, fidelity, densities.
//! * [`estimator`]: fidelity maximization, transmissivity search, classification, sweeps.
//! * [`fock`]: truncated number-basis oracle for validating the closed forms.
//! * [`harness`]: named experiments behind the command-line tool.

pub mod amplitude;
pub mod error;
pub mod estimator;
pub mod fock;
pub mod harness;
pub mod interferometer;
pub mod optimize;

pub use error::{Error, Result};
