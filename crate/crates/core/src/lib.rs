//! Numerical simulator for cat-code tele-correction with heterodyne phase
//! readout, including Yurke–Stoler ancilla preparation and the Monte Carlo
//! experiment harness built on top of it.

pub mod circuit;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod measure;
pub mod states;

pub use error::{Error, Result};
pub use fock::{coherent_state, default_cutoff, fidelity, inner, DiagonalPhase, FockVector, ModeRegister};
pub use states::{
    cat_minus, cat_normalization, cat_plus, cat_state, displaced_ys, kerr_evolve_ys, logical_state,
    modular_subspace_probability, ys_phases, ys_state, CatParams, YsParams,
};
