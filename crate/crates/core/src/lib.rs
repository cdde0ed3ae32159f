//! Hydrogen-like ground state in stochastic electrodynamics: a stochastic
//! vacuum field synthesized as a frequency sum, the damped and driven
//! relativistic orbit it drives, and the statistics of long runs.
//!
//! Everything is in Bohr units: lengths in `a0 = hbar/(Z alpha m c)`, times in
//! `t0 = hbar/(Z^2 alpha^2 m c^2)`, energies in `Z^2 alpha^2 m c^2`.

pub mod correlator;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod rng;
pub mod stats;
pub mod units;
pub mod verification;

pub use error::{CheckpointError, Result, SedError};
pub use units::{ElectronState, PhysicalParams, RelativisticTerms, Vec3};
