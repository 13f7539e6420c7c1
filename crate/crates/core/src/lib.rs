//! Simulation and estimation toolkit for trapped-ion hyperfine qubit memories.
//!
//! - [`hyperfine`]: Zeeman spectrum, transition sensitivities, clock fields.
//! - [`noise`]: seeded magnetic-field noise traces and dephasing estimates.
//! - [`dynamics`]: single-qubit rotations, Ramsey and spin-echo experiments.
//! - [`dfs`]: two-ion decoherence-free-subspace memory experiments.
//! - [`estimation`]: fringe, decay, sinusoid and linear fits.

pub mod dfs;
pub mod dynamics;
pub mod estimation;
pub mod hyperfine;
pub mod noise;
pub mod rng;

pub use hyperfine::{FieldSensitivity, HyperfineConstants, LevelLabel, Transition, ZeemanLevel};
pub use noise::{FieldTrace, GradientTrace, NoiseComponent, NoiseSpec};
